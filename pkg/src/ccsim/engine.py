"""Collectives over the lockstep fabric.

Each collective is written as a per-rank *program*: a generator that yields
one handshake, then one `Post` per communication round, receiving the
delivered payload back at each yield.  Programs never share state; drivers
move everything by value through the network.  The same programs run under
the single-threaded coordinator (`run_lockstep`) and under one thread per
rank (`run_threaded`) and produce identical results and traces.

The reduce-scatter keeps each rank's partial results rotated: R[i] is the
partial result that will end up at rank (r + i) mod p, held contiguously so
every round sends one consecutive run R[s .. s'-1] and folds the received
run into R[0 .. s'-s-1].  The allreduce pushes each round bound on a stack
and replays it backwards with the send direction reversed, which is the
dissemination allgather; the standalone allgather is that second phase
alone.  All-to-all reuses the reduce-scatter pattern with tagged
concatenation standing in for the reduction operator.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Generator, Iterable, Sequence

import numpy as np

from .blocks import BlockLayout, BlockVector
from .ops import ReductionOp
from .schedule import SkipSchedule, halving_skips, validate_schedule, ScheduleError
from .transport import BlockingFabric, Network, Post, ProtocolViolation

COLLECTIVES = ("reduce_scatter", "allreduce", "allgather", "alltoall")
MODES = ("lockstep", "threaded")


class CollectiveMismatchError(RuntimeError):
    """Ranks entered the collective with incompatible arguments."""


@dataclass(frozen=True)
class Handshake:
    """Round-zero control message: every rank's view of the collective.

    Compared field-by-field before any data moves; a mismatch aborts with a
    diagnostic instead of leaving the run undefined.  Not counted as a
    communication round.
    """

    fingerprint: tuple


@dataclass
class RankContext:
    rank: int
    p: int
    schedule: SkipSchedule
    network: Network
    allow_non_commutative: bool = False

    def __post_init__(self):
        if not 0 <= self.rank < self.p:
            raise ValueError(f"rank {self.rank} out of range for p={self.p}")
        if self.schedule.p != self.p:
            raise ValueError(
                f"schedule is for p={self.schedule.p}, context has p={self.p}")

    def record_reductions(self, blocks: int, elements: int) -> None:
        self.network.record_reductions(self.rank, blocks, elements)


Program = Generator[Any, Any, Any]


def _dtype_token(data) -> str:
    return str(data.dtype) if isinstance(data, np.ndarray) else "object"


def _fingerprint(collective: str, ctx: RankContext, layout: BlockLayout,
                 op: ReductionOp | None, elements: str) -> tuple:
    return (
        ("collective", collective),
        ("p", ctx.p),
        ("layout", layout.sizes),
        ("skips", ctx.schedule.skips),
        ("operator", None if op is None else op.name),
        ("elements", elements),
    )


def _require_reducible(ctx: RankContext, op: ReductionOp) -> None:
    if not op.commutative and not ctx.allow_non_commutative:
        raise ValueError(
            f"operator {op.name!r} is not declared commutative; the schedule "
            "reorders operands, so pass allow_non_commutative=True only if "
            "you accept the engine's reduction order")


def _rotate_front(data, start: int):
    head, tail = data[start:], data[:start]
    if isinstance(data, np.ndarray):
        return np.concatenate([head, tail])
    return list(head) + list(tail)


def _rotated_vector(vector: BlockVector, r: int) -> BlockVector:
    layout = vector.layout.rotated(r)
    return BlockVector(layout, _rotate_front(vector.data, vector.layout.offsets[r]))


def _unrotated_vector(rotated: BlockVector, layout: BlockLayout, r: int) -> BlockVector:
    # rotated blocks [0 .. p-r-1] are global blocks r..p-1; undo the rotation.
    split = rotated.layout.total - layout.offsets[r]
    return BlockVector(layout, _rotate_front(rotated.data, split))


def _empty_data_like(sample, n: int):
    if isinstance(sample, np.ndarray):
        return np.empty(n, dtype=sample.dtype)
    return [None] * n


def _fold_received(ctx: RankContext, R: BlockVector, op: ReductionOp,
                   nblocks: int, incoming) -> None:
    """R[i] <- op(R[i], T[i]) for the first nblocks rotated blocks."""
    lo, hi = R.layout.span(0, nblocks)
    if len(incoming) != hi - lo:
        raise CollectiveMismatchError(
            f"rank {ctx.rank}: received {len(incoming)} elements, expected {hi - lo}")
    if op.elementwise:
        folded = op.apply(R.data[lo:hi], incoming)
        if len(folded) != hi - lo:
            raise ValueError(f"operator {op.name} changed the run length")
        R.data[lo:hi] = folded
    else:
        off = 0
        for i in range(nblocks):
            blo, bhi = R.layout.span(i, i + 1)
            folded = op.apply(R.data[blo:bhi], incoming[off:off + bhi - blo])
            if len(folded) != bhi - blo:
                raise ValueError(f"operator {op.name} changed the block size")
            R.data[blo:bhi] = folded
            off += bhi - blo
    ctx.record_reductions(nblocks, hi - lo)


def partitioned_allreduce(ctx: RankContext, vector: BlockVector,
                          op: ReductionOp) -> Program:
    """Reduce-scatter program for one rank: returns its result block.

    Rotated copy first, then per round with previous bound s' and skip s:
    send R[s..s'-1] to (r+s) mod p, receive the same number of blocks from
    (r-s) mod p and fold them into R[0..s'-s-1], local operand on the left.
    After the last round R[0] is the reduction of block r over all ranks.
    """
    _require_reducible(ctx, op)
    p, r = ctx.p, ctx.rank
    yield Handshake(_fingerprint("reduce_scatter", ctx, vector.layout, op,
                                 _dtype_token(vector.data)))
    R = _rotated_vector(vector, r)
    s = p
    for s_next in ctx.schedule.skips:
        s_prev, s = s, s_next
        outgoing = R.run(s, s_prev)
        incoming = yield Post(
            rank=r, to=(r + s) % p, frm=(r - s) % p, skip=s,
            payload=outgoing, blocks=s_prev - s, elements=len(outgoing))
        _fold_received(ctx, R, op, s_prev - s, incoming)
    return R.run(0, 1)


def allreduce(ctx: RankContext, vector: BlockVector, op: ReductionOp) -> Program:
    """Allreduce program: reduce-scatter phase, then the skips replayed in
    reverse with send/receive swapped to gather every result block."""
    _require_reducible(ctx, op)
    p, r = ctx.p, ctx.rank
    yield Handshake(_fingerprint("allreduce", ctx, vector.layout, op,
                                 _dtype_token(vector.data)))
    R = _rotated_vector(vector, r)
    bounds: list[int] = []
    s = p
    for s_next in ctx.schedule.skips:
        bounds.append(s)
        s_prev, s = s, s_next
        outgoing = R.run(s, s_prev)
        incoming = yield Post(
            rank=r, to=(r + s) % p, frm=(r - s) % p, skip=s,
            payload=outgoing, blocks=s_prev - s, elements=len(outgoing))
        _fold_received(ctx, R, op, s_prev - s, incoming)
    while bounds:
        s_prev = bounds.pop()
        outgoing = R.run(0, s_prev - s)
        incoming = yield Post(
            rank=r, to=(r - s) % p, frm=(r + s) % p, skip=s,
            payload=outgoing, blocks=s_prev - s, elements=len(outgoing))
        R.write_run(s, s_prev, incoming)
        s = s_prev
    return _unrotated_vector(R, vector.layout, r)


def allgather(ctx: RankContext, block, layout: BlockLayout) -> Program:
    """Allgather program: every rank contributes its own block (global block
    `rank`) and ends with the full concatenation in global order.

    This is the reversed phase of the allreduce run standalone: the round
    bounds are replayed backwards, each round sending R[0..s'-s-1] to
    (r-s) mod p and receiving R[s..s'-1] from (r+s) mod p.
    """
    p, r = ctx.p, ctx.rank
    if len(block) != layout.sizes[r]:
        raise CollectiveMismatchError(
            f"rank {r} contributed {len(block)} elements, layout says {layout.sizes[r]}")
    yield Handshake(_fingerprint("allgather", ctx, layout, None, _dtype_token(block)))
    R = BlockVector(layout.rotated(r), _empty_data_like(block, layout.total))
    R.set_block(0, block)
    bounds = (p, *ctx.schedule.skips)
    for k in range(len(ctx.schedule.skips) - 1, -1, -1):
        s_prev, s = bounds[k], bounds[k + 1]
        outgoing = R.run(0, s_prev - s)
        incoming = yield Post(
            rank=r, to=(r - s) % p, frm=(r + s) % p, skip=s,
            payload=outgoing, blocks=s_prev - s, elements=len(outgoing))
        R.write_run(s, s_prev, incoming)
    return _unrotated_vector(R, layout, r)


def alltoall(ctx: RankContext, vector: BlockVector) -> Program:
    """All-to-all program: output block i is rank i's input block `rank`.

    Runs the reduce-scatter pattern with the operator replaced by tagged
    concatenation: each partial "block" is a list of (source, fragment)
    pairs, and the concatenated result for block 0 is re-ordered by source
    at the end.  Requires one uniform per-pair block size.
    """
    p, r = ctx.p, ctx.rank
    sizes = set(vector.layout.sizes)
    if len(sizes) != 1:
        raise ValueError(
            f"regular all-to-all needs equal block sizes, got {sorted(sizes)}")
    yield Handshake(_fingerprint("alltoall", ctx, vector.layout, None,
                                 _dtype_token(vector.data)))
    frags: list[list] = [[(r, vector.run((r + i) % p, (r + i) % p + 1))]
                         for i in range(p)]
    s = p
    for s_next in ctx.schedule.skips:
        s_prev, s = s, s_next
        outgoing = [list(frags[i]) for i in range(s, s_prev)]
        n_out = sum(len(f) for bucket in outgoing for _, f in bucket)
        incoming = yield Post(
            rank=r, to=(r + s) % p, frm=(r - s) % p, skip=s,
            payload=outgoing, blocks=s_prev - s, elements=n_out)
        n_in = 0
        for i in range(s_prev - s):
            frags[i] = frags[i] + incoming[i]
            n_in += sum(len(f) for _, f in incoming[i])
        ctx.record_reductions(s_prev - s, n_in)
    by_source = dict(frags[0])
    if len(by_source) != p:
        raise ProtocolViolation(
            f"rank {r} gathered fragments from {sorted(by_source)} instead of all ranks")
    out = BlockVector(vector.layout, _empty_data_like(vector.data, vector.layout.total))
    for i in range(p):
        out.set_block(i, by_source[i])
    return out


def _check_handshakes(handshakes: Sequence[Handshake]) -> None:
    base = handshakes[0].fingerprint
    for r, h in enumerate(handshakes):
        if h.fingerprint == base:
            continue
        for (key, base_value), (_, value) in zip(base, h.fingerprint):
            if value != base_value:
                raise CollectiveMismatchError(
                    f"rank {r} disagrees with rank 0 on {key}: "
                    f"{value!r} != {base_value!r}")
        raise CollectiveMismatchError(
            f"rank {r} handshake does not match rank 0")


def _take_handshake(program: Program) -> Handshake:
    item = next(program)
    if not isinstance(item, Handshake):
        raise ProtocolViolation("program must open with a handshake")
    return item


def run_lockstep(network: Network, programs: Iterable[Program]) -> list:
    """Drive all rank programs round-by-round on the calling thread."""
    gens = list(programs)
    _check_handshakes([_take_handshake(g) for g in gens])
    n = len(gens)
    results: list = [None] * n
    inbox: list = [None] * n
    pending = list(range(n))
    while pending:
        posts: list[Post] = []
        stopped: list[int] = []
        for r in pending:
            try:
                post = gens[r].send(inbox[r])
            except StopIteration as stop:
                results[r] = stop.value
                stopped.append(r)
            else:
                posts.append(post)
        if posts and stopped:
            raise ProtocolViolation(
                f"ranks {stopped} finished while ranks "
                f"{[post.rank for post in posts]} still exchanging")
        if stopped:
            break
        for post in posts:
            network.submit(post)
        deliveries = network.complete_round()
        for post in posts:
            inbox[post.rank] = deliveries[post.rank]
    return results


def run_threaded(network: Network, programs: Iterable[Program],
                 timeout: float = 120.0) -> list:
    """Drive each rank program on its own thread, synchronized per round."""
    gens = list(programs)
    n = len(gens)
    fabric = BlockingFabric(network, n, timeout=timeout)
    barrier = fabric.barrier
    handshakes: list = [None] * n
    handshake_error: list = [None]
    results: list = [None] * n
    errors: list = []
    errors_lock = threading.Lock()

    def worker(r: int, gen: Program) -> None:
        try:
            handshakes[r] = _take_handshake(gen)
            if barrier.wait() == 0:
                try:
                    _check_handshakes(handshakes)
                    handshake_error[0] = None
                except Exception as exc:
                    handshake_error[0] = exc
            barrier.wait()
            if handshake_error[0] is not None:
                raise handshake_error[0]
            value = None
            while True:
                try:
                    post = gen.send(value)
                except StopIteration as stop:
                    results[r] = stop.value
                    return
                value = fabric.exchange(
                    post.rank, post.to, post.payload, post.frm,
                    skip=post.skip, blocks=post.blocks, elements=post.elements)
        except BaseException as exc:
            with errors_lock:
                errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=worker, args=(r, g), daemon=True)
               for r, g in enumerate(gens)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        for exc in errors:
            if not isinstance(exc, threading.BrokenBarrierError):
                raise exc
        raise errors[0]
    return results


@dataclass
class ExecutionResult:
    collective: str
    results: list
    network: Network

    @property
    def metrics(self):
        return self.network.collect_metrics()

    @property
    def trace(self):
        return self.network.trace


def execute(collective: str, inputs: Sequence, *,
            schedule: SkipSchedule | None = None,
            op: ReductionOp | None = None,
            layout: BlockLayout | None = None,
            mode: str = "lockstep",
            allow_non_commutative: bool = False,
            bytes_per_element: int | None = None) -> ExecutionResult:
    """Run one collective over all ranks and return results plus the network.

    `inputs` holds one entry per rank: a BlockVector for reduce_scatter,
    allreduce and alltoall, or the rank's own block for allgather (whose
    shared layout is inferred from the block lengths unless given).
    """
    if collective not in COLLECTIVES:
        raise ValueError(f"unknown collective {collective!r}; pick from {COLLECTIVES}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; pick from {MODES}")
    p = len(inputs)
    if p < 1:
        raise ValueError("need at least one rank")

    if schedule is None:
        schedule = halving_skips(p)
    if schedule.p != p:
        raise ScheduleError(f"schedule is for p={schedule.p}, got {p} ranks")
    report = validate_schedule(schedule)
    if not report.ok:
        raise ScheduleError(report.summary())

    needs_op = collective in ("reduce_scatter", "allreduce")
    if needs_op and op is None:
        raise ValueError(f"{collective} requires a reduction operator")
    if not needs_op and op is not None:
        raise ValueError(f"{collective} does not take a reduction operator")

    if collective == "allgather":
        if layout is None:
            layout = BlockLayout(tuple(len(b) for b in inputs))
        sample = inputs[0]
    else:
        layout = inputs[0].layout
        sample = inputs[0].data

    if bytes_per_element is None:
        bytes_per_element = sample.itemsize if isinstance(sample, np.ndarray) else 0

    network = Network(p, bytes_per_element=bytes_per_element)
    contexts = [RankContext(r, p, schedule, network, allow_non_commutative)
                for r in range(p)]
    if collective == "reduce_scatter":
        programs = [partitioned_allreduce(ctx, inputs[ctx.rank], op) for ctx in contexts]
    elif collective == "allreduce":
        programs = [allreduce(ctx, inputs[ctx.rank], op) for ctx in contexts]
    elif collective == "allgather":
        programs = [allgather(ctx, inputs[ctx.rank], layout) for ctx in contexts]
    else:
        programs = [alltoall(ctx, inputs[ctx.rank]) for ctx in contexts]

    runner = run_lockstep if mode == "lockstep" else run_threaded
    results = runner(network, programs)
    return ExecutionResult(collective, results, network)
