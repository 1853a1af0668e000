"""Circulant-graph collective communication: schedules, lockstep simulator,
brute-force oracles, and an analytic cost model.

The reduce-scatter runs in ceil(log2 p) rounds with every rank sending,
receiving and reducing exactly p-1 blocks; the allreduce appends the
reversed schedule as an allgather phase for 2*ceil(log2 p) rounds and
2*(p-1) blocks.  `execute` runs any of the collectives over a simulated
one-ported fabric and returns per-rank results plus a full trace.
"""

from .blocks import BlockLayout, BlockVector
from .costmodel import (CostParams, allreduce_cost, irregular_upper_bound,
                        measured_cost, uniform_reduce_scatter_cost)
from .engine import (COLLECTIVES, CollectiveMismatchError, ExecutionResult,
                     Handshake, RankContext, allgather, allreduce, alltoall,
                     execute, partitioned_allreduce, run_lockstep,
                     run_threaded)
from .ops import FLOAT64_SUM, INT64_SUM, ReductionOp, make_symbolic_op
from .oracle import (GlobalInput, oracle_allgather, oracle_allreduce,
                     oracle_alltoall, oracle_reduce_scatter)
from .schedule import (GENERATORS, ReductionTree, ScheduleError, SkipSchedule,
                       ValidationReport, build_tree, ceil_log2, doubling_skips,
                       halving_skips, linear_skips, reduction_order,
                       run_lengths, schedule_to_json, sqrt_skips, tree_to_dot,
                       validate_schedule)
from .terms import Combine, Leaf, Term, leaf_indices, render
from .transport import (BlockingFabric, DeadlockError, Metrics, Network,
                        ProtocolViolation, RoundTrace, TraceEntry,
                        trace_to_csv, trace_to_json_lines)

__version__ = "0.1.0"

__all__ = [
    "BlockLayout", "BlockVector",
    "CostParams", "allreduce_cost", "irregular_upper_bound", "measured_cost",
    "uniform_reduce_scatter_cost",
    "COLLECTIVES", "CollectiveMismatchError", "ExecutionResult", "Handshake",
    "RankContext", "allgather", "allreduce", "alltoall", "execute",
    "partitioned_allreduce", "run_lockstep", "run_threaded",
    "FLOAT64_SUM", "INT64_SUM", "ReductionOp", "make_symbolic_op",
    "GlobalInput", "oracle_allgather", "oracle_allreduce", "oracle_alltoall",
    "oracle_reduce_scatter",
    "GENERATORS", "ReductionTree", "ScheduleError", "SkipSchedule",
    "ValidationReport", "build_tree", "ceil_log2", "doubling_skips",
    "halving_skips", "linear_skips", "reduction_order", "run_lengths",
    "schedule_to_json", "sqrt_skips", "tree_to_dot", "validate_schedule",
    "Combine", "Leaf", "Term", "leaf_indices", "render",
    "BlockingFabric", "DeadlockError", "Metrics", "Network",
    "ProtocolViolation", "RoundTrace", "TraceEntry", "trace_to_csv",
    "trace_to_json_lines",
    "__version__",
]
