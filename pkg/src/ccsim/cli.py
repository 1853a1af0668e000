"""Command-line front end: schedule inspection, verified runs, cost sweeps.

Exit codes: 0 success, 1 verification/validation failure, 2 usage error.
The default seed comes from CCSIM_SEED when set.
"""

from __future__ import annotations

import argparse
import bisect
import csv
import io
import itertools
import os
import sys
from fractions import Fraction

import numpy as np

from . import synthetic
from .blocks import BlockLayout, BlockVector
from .costmodel import CostParams, measured_cost, uniform_volume
from .engine import COLLECTIVES, MODES, execute
from .ops import FLOAT64_SUM, INT64_SUM, make_symbolic_op
from .oracle import (GlobalInput, oracle_allgather, oracle_allreduce,
                     oracle_alltoall, oracle_reduce_scatter)
from .schedule import (GENERATORS, SkipSchedule, build_tree,
                       reduction_order, run_lengths, schedule_to_json,
                       tree_to_dot, validate_schedule)
from .terms import render
from .transport import trace_to_csv, trace_to_json_lines

FLOAT_RTOL = 1e-12


class UsageError(Exception):
    """Bad flag combination; surfaced with exit code 2."""


def _default_seed() -> int:
    return int(os.environ.get("CCSIM_SEED", "0"))


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _make_schedule(p: int, scheme: str, skips: str | None) -> SkipSchedule:
    if scheme == "custom":
        if not skips:
            raise UsageError("--scheme custom requires --skips")
        return SkipSchedule(p, tuple(_parse_int_list(skips)), "custom")
    if skips:
        raise UsageError("--skips only applies with --scheme custom")
    return GENERATORS[scheme](p)


def cmd_schedule(args) -> int:
    sched = _make_schedule(args.p, args.scheme, args.skips)
    report = validate_schedule(sched)
    print("skips:" + "".join(f" {s}" for s in sched.skips))
    print(f"rounds: {sched.rounds}")
    print("run lengths:" + "".join(f" {n}" for n in run_lengths(sched)))
    if not report.ok:
        for check in report.failures:
            print(f"FAIL {check.name}: {check.detail}")
        return 1
    print("representable: yes (every 0 < i < p is a sum of distinct skips)")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(schedule_to_json(sched) + "\n")
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(tree_to_dot(build_tree(sched)))
    return 0


def _build_layout(args) -> BlockLayout:
    if args.sizes is not None:
        sizes = _parse_int_list(args.sizes)
        if len(sizes) != args.p:
            raise UsageError(f"--sizes lists {len(sizes)} blocks, -p says {args.p}")
        return BlockLayout(tuple(sizes))
    if args.random_layout is not None:
        return BlockLayout(synthetic.random_sizes(args.seed, args.p, args.random_layout))
    m = args.m if args.m is not None else 4 * args.p
    return BlockLayout.spread(args.p, m)


def _first_mismatch(got, want) -> int | None:
    """Index of the first differing element, None when equal."""
    got = np.asarray(got)
    want = np.asarray(want)
    if got.shape != want.shape:
        return 0
    if got.dtype.kind == "f":
        ok = np.isclose(got, want, rtol=FLOAT_RTOL, atol=0.0)
    else:
        ok = got == want
    if got.size == 0 or bool(np.all(ok)):
        return None
    return int(np.argmin(ok))


def _block_of(layout: BlockLayout, element: int) -> int:
    return bisect.bisect_right(layout.offsets, element) - 1


def _verify_run(args, sched, layout, vectors, result) -> tuple[int, int] | None:
    """First differing (rank, block index), or None when everything matches."""
    p = args.p
    if args.elem == "symbolic":
        tree = build_tree(sched)
        for r in range(p):
            want = reduction_order(tree, r)
            got = result.results[r][0]
            if got != want:
                print(f"rank {r}: computed {render(got)}, expected {render(want)}",
                      file=sys.stderr)
                return r, r
        return None

    op = INT64_SUM if args.elem == "int64" else FLOAT64_SUM
    if args.collective == "reduce_scatter":
        want_blocks = oracle_reduce_scatter(GlobalInput(layout, tuple(vectors)), op)
        for r in range(p):
            if _first_mismatch(result.results[r], want_blocks[r]) is not None:
                return r, r
        return None
    if args.collective == "allreduce":
        want = oracle_allreduce(GlobalInput(layout, tuple(vectors)), op)
        expected = [want.data] * p
    elif args.collective == "allgather":
        blocks = [vectors[r].block(r) for r in range(p)]
        expected = [oracle_allgather(layout, blocks).data] * p
    else:
        expected = [w.data for w in oracle_alltoall(GlobalInput(layout, tuple(vectors)))]
    for r in range(p):
        at = _first_mismatch(result.results[r].data, expected[r])
        if at is not None:
            return r, _block_of(layout, at)
    return None


def cmd_run(args) -> int:
    sched = _make_schedule(args.p, args.scheme, args.skips)
    report = validate_schedule(sched)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return 1
    if args.elem == "symbolic" and args.collective != "reduce_scatter":
        raise UsageError("--elem symbolic is only defined for reduce_scatter")

    if args.elem == "symbolic":
        vectors = synthetic.symbolic_vectors(args.p)
        layout = vectors[0].layout
        op = make_symbolic_op()
    else:
        layout = _build_layout(args)
        if args.elem == "int64":
            vectors = synthetic.int_vectors(args.seed, layout)
            op = INT64_SUM
        else:
            vectors = synthetic.float_vectors(args.seed, layout)
            op = FLOAT64_SUM

    if args.collective == "allgather":
        inputs = [vectors[r].block(r) for r in range(args.p)]
        result = execute("allgather", inputs, schedule=sched, layout=layout,
                         mode=args.mode)
    elif args.collective == "alltoall":
        result = execute("alltoall", vectors, schedule=sched, mode=args.mode)
    else:
        result = execute(args.collective, vectors, schedule=sched, op=op,
                         mode=args.mode,
                         allow_non_commutative=(args.elem == "symbolic"))

    metrics = result.metrics
    line = (f"rounds={metrics.rounds}"
            f" blocks/rank={max(metrics.blocks_sent, default=0)}"
            f" ops/rank={max(metrics.op_applications, default=0)}")

    status = 0
    if args.verify:
        mismatch = _verify_run(args, sched, layout, vectors, result)
        if mismatch is None:
            line += " VERIFIED"
        else:
            line += f" MISMATCH rank={mismatch[0]} block={mismatch[1]}"
            status = 1
    print(line)

    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(trace_to_json_lines(result.trace))
    if args.trace_csv:
        with open(args.trace_csv, "w") as fh:
            fh.write(trace_to_csv(result.trace))
    return status


def cmd_cost(args) -> int:
    params = CostParams(alpha=Fraction(args.alpha), beta=Fraction(args.beta),
                        gamma=Fraction(args.gamma))
    schemes = [s for s in args.scheme.split(",") if s]
    for scheme in schemes:
        if scheme not in GENERATORS:
            raise UsageError(f"unknown scheme {scheme!r}")
    rows = [["p", "m", "scheme", "alpha", "beta", "gamma",
             "analytic", "measured", "upper_bound"]]
    for p, m, scheme in itertools.product(
            _parse_int_list(args.p), _parse_int_list(args.m), schemes):
        sched = GENERATORS[scheme](p)
        layout = BlockLayout.spread(p, m)
        # values are irrelevant to cost accounting; zeros keep the sweep cheap
        vectors = [BlockVector(layout, np.zeros(layout.total, dtype=np.int64))
                   for _ in range(p)]
        # analytic/upper use the scheme's own round count; for halving they
        # coincide with uniform_reduce_scatter_cost / irregular_upper_bound
        q = sched.rounds
        vol = uniform_volume(p, m)
        if args.collective == "allreduce":
            result = execute("allreduce", vectors, schedule=sched, op=INT64_SUM)
            analytic = (params.alpha * 2 * q + params.beta * 2 * vol
                        + params.gamma * vol)
            upper = (2 * q * (params.alpha + params.beta * m)
                     + q * params.gamma * m)
        else:
            result = execute("reduce_scatter", vectors, schedule=sched, op=INT64_SUM)
            analytic = params.alpha * q + (params.beta + params.gamma) * vol
            upper = q * (params.alpha + (params.beta + params.gamma) * m)
        measured = measured_cost(result.metrics, params)
        rows.append([p, m, scheme, args.alpha, args.beta, args.gamma,
                     str(analytic), str(measured), str(upper)])

    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccsim",
        description="Circulant-graph collective communication simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("schedule", help="inspect and validate a skip schedule")
    sp.add_argument("-p", type=int, required=True, help="rank count")
    sp.add_argument("--scheme", choices=(*GENERATORS, "custom"), default="halving")
    sp.add_argument("--skips", help="comma-separated skips for --scheme custom")
    sp.add_argument("--json", metavar="FILE", help="write skips as a JSON array")
    sp.add_argument("--dot", metavar="FILE", help="write the reduction tree as DOT")
    sp.set_defaults(func=cmd_schedule)

    rp = sub.add_parser("run", help="execute a collective on synthetic data")
    rp.add_argument("-p", type=int, required=True, help="rank count")
    rp.add_argument("--collective", choices=COLLECTIVES, default="reduce_scatter")
    rp.add_argument("--scheme", choices=(*GENERATORS, "custom"), default="halving")
    rp.add_argument("--skips", help="comma-separated skips for --scheme custom")
    rp.add_argument("--m", type=int, help="total elements, spread evenly (default 4p)")
    rp.add_argument("--sizes", help="explicit comma-separated block sizes")
    rp.add_argument("--random-layout", type=int, metavar="MAX",
                    help="random block sizes in [0, MAX], from the seed")
    rp.add_argument("--elem", choices=("int64", "float64", "symbolic"),
                    default="int64")
    rp.add_argument("--verify", action="store_true",
                    help="compare against the brute-force oracle")
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--mode", choices=MODES, default="lockstep")
    rp.add_argument("--trace", metavar="FILE", help="write the JSON-lines trace")
    rp.add_argument("--trace-csv", metavar="FILE", help="write the CSV trace")
    rp.set_defaults(func=cmd_run)

    cp = sub.add_parser("cost", help="analytic vs measured cost sweep (CSV)")
    cp.add_argument("--p", required=True, help="comma-separated rank counts")
    cp.add_argument("--m", required=True, help="comma-separated element counts")
    cp.add_argument("--scheme", default="halving",
                    help="comma-separated subset of: " + ",".join(GENERATORS))
    cp.add_argument("--collective", choices=("reduce_scatter", "allreduce"),
                    default="reduce_scatter")
    cp.add_argument("--alpha", default="1")
    cp.add_argument("--beta", default="1")
    cp.add_argument("--gamma", default="1")
    cp.add_argument("--out", metavar="FILE", help="write CSV here instead of stdout")
    cp.set_defaults(func=cmd_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
