"""Simulated one-ported, bidirectional, lockstep fabric.

Each rank posts exactly one combined send/receive per round.  A round
completes only when all p posts are in; the network then checks that the
pairing is consistent (whoever rank r sends to must name r as its
from-rank), that the round is circulant (one skip explains every pair, in
forward or reversed orientation), delivers the payloads, and appends one
trace record.  Payload ownership transfers on post: senders hand over
freshly copied runs and never touch them again.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass
from typing import Any


class ProtocolViolation(RuntimeError):
    """A rank broke the one-post-per-round discipline."""


class DeadlockError(ProtocolViolation):
    """Send/receive pairing is inconsistent; the round can never complete."""


@dataclass(frozen=True)
class Post:
    rank: int
    to: int
    frm: int
    skip: int
    payload: Any
    blocks: int
    elements: int


@dataclass(frozen=True)
class TraceEntry:
    rank: int
    to: int
    frm: int
    blocks: int
    elements: int
    nbytes: int


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    skip: int
    entries: tuple[TraceEntry, ...]


@dataclass(frozen=True)
class Metrics:
    """Aggregate per-rank counters over a completed collective.

    ``op_applications`` and ``elements_reduced`` are reported by the engine
    (the fabric cannot see reductions); everything else is counted here.
    """

    p: int
    rounds: int
    blocks_sent: tuple[int, ...]
    blocks_received: tuple[int, ...]
    elements_sent: tuple[int, ...]
    elements_received: tuple[int, ...]
    op_applications: tuple[int, ...]
    elements_reduced: tuple[int, ...]


class Network:
    """Shared fabric state for p ranks.

    Thread-safe for one post per rank per round; `complete_round` must be
    called once per round after all posts are in (drivers arrange this).
    """

    def __init__(self, p: int, *, bytes_per_element: int = 8):
        if p < 1:
            raise ValueError(f"rank count must be >= 1, got {p}")
        self.p = p
        self.bytes_per_element = bytes_per_element
        self._round = 0
        self._pending: dict[int, Post] = {}
        self._trace: list[RoundTrace] = []
        self._blocks_sent = [0] * p
        self._blocks_received = [0] * p
        self._elements_sent = [0] * p
        self._elements_received = [0] * p
        self._op_applications = [0] * p
        self._elements_reduced = [0] * p
        self._lock = threading.Lock()

    def post(self, rank: int, to: int, payload, frm: int, *,
             skip: int, blocks: int, elements: int) -> None:
        """Register rank's combined send/receive for the current round."""
        for label, value in (("rank", rank), ("to", to), ("from", frm)):
            if not 0 <= value < self.p:
                raise ProtocolViolation(f"{label}={value} out of range for p={self.p}")
        with self._lock:
            if rank in self._pending:
                raise ProtocolViolation(
                    f"rank {rank} posted twice in round {self._round}")
            self._pending[rank] = Post(rank, to, frm, skip, payload, blocks, elements)

    def submit(self, post: Post) -> None:
        self.post(post.rank, post.to, post.payload, post.frm,
                  skip=post.skip, blocks=post.blocks, elements=post.elements)

    def pending_ranks(self) -> tuple[int, ...]:
        with self._lock:
            return tuple(sorted(self._pending))

    def complete_round(self) -> list:
        """Validate the round, record it, and return payloads by rank."""
        with self._lock:
            posts = dict(self._pending)
            k = self._round

            missing = [r for r in range(self.p) if r not in posts]
            if missing:
                raise ProtocolViolation(
                    f"round {k} incomplete: ranks {missing} never posted")

            for post in posts.values():
                partner = posts[post.to]
                if partner.frm != post.rank:
                    raise DeadlockError(
                        f"round {k}: rank {post.rank} sends to {post.to}, "
                        f"but rank {post.to} expects from {partner.frm}")
                source = posts[post.frm]
                if source.to != post.rank:
                    raise DeadlockError(
                        f"round {k}: rank {post.rank} expects from {post.frm}, "
                        f"but rank {post.frm} sends to {source.to}")

            skips = {post.skip for post in posts.values()}
            if len(skips) != 1:
                raise ProtocolViolation(
                    f"round {k}: ranks disagree on the skip: {sorted(skips)}")
            s = skips.pop()
            forward = all(post.to == (post.rank + s) % self.p for post in posts.values())
            reverse = all(post.to == (post.rank - s) % self.p for post in posts.values())
            if not (forward or reverse):
                raise ProtocolViolation(
                    f"round {k}: pairs are not circulant with skip {s}")

            entries = []
            for r in range(self.p):
                post = posts[r]
                entries.append(TraceEntry(
                    rank=r, to=post.to, frm=post.frm, blocks=post.blocks,
                    elements=post.elements,
                    nbytes=post.elements * self.bytes_per_element))
                self._blocks_sent[r] += post.blocks
                self._elements_sent[r] += post.elements
                self._blocks_received[r] += posts[post.frm].blocks
                self._elements_received[r] += posts[post.frm].elements
            self._trace.append(RoundTrace(k, s, tuple(entries)))
            self._round += 1
            self._pending.clear()
            return [posts[posts[r].frm].payload for r in range(self.p)]

    def record_reductions(self, rank: int, blocks: int, elements: int) -> None:
        """Engine hook: count operator applications performed by a rank."""
        self._op_applications[rank] += blocks
        self._elements_reduced[rank] += elements

    @property
    def trace(self) -> tuple[RoundTrace, ...]:
        return tuple(self._trace)

    def collect_metrics(self) -> Metrics:
        return Metrics(
            p=self.p,
            rounds=self._round,
            blocks_sent=tuple(self._blocks_sent),
            blocks_received=tuple(self._blocks_received),
            elements_sent=tuple(self._elements_sent),
            elements_received=tuple(self._elements_received),
            op_applications=tuple(self._op_applications),
            elements_reduced=tuple(self._elements_reduced),
        )


class BlockingFabric:
    """Blocking `exchange()` facade for one-thread-per-rank execution.

    All rank threads post, then meet at a barrier; the first arrival
    completes the round for everyone.  Errors raised while completing the
    round propagate to every thread.
    """

    def __init__(self, network: Network, parties: int, timeout: float = 120.0):
        self.network = network
        self._barrier = threading.Barrier(parties, timeout=timeout)
        self._deliveries: list | None = None
        self._error: Exception | None = None

    @property
    def barrier(self) -> threading.Barrier:
        return self._barrier

    def exchange(self, rank: int, to: int, payload, frm: int, *,
                 skip: int, blocks: int, elements: int):
        """Post for this round and return the payload sent by `frm`."""
        self.network.post(rank, to, payload, frm,
                          skip=skip, blocks=blocks, elements=elements)
        if self._barrier.wait() == 0:
            try:
                self._deliveries = self.network.complete_round()
                self._error = None
            except Exception as exc:
                self._deliveries = None
                self._error = exc
        self._barrier.wait()
        if self._error is not None:
            raise self._error
        assert self._deliveries is not None
        return self._deliveries[rank]


def trace_to_json_lines(trace) -> str:
    """One JSON object per round:
    {"round": k, "skip": s, "entries": [{"rank": r, "to": t, "from": f,
    "blocks": b, "elements": e}, ...]}
    """
    lines = []
    for rt in trace:
        lines.append(json.dumps({
            "round": rt.round_index,
            "skip": rt.skip,
            "entries": [
                {"rank": e.rank, "to": e.to, "from": e.frm,
                 "blocks": e.blocks, "elements": e.elements}
                for e in rt.entries
            ],
        }))
    return "\n".join(lines) + ("\n" if lines else "")


def trace_to_csv(trace) -> str:
    """Flat CSV with the same columns as the JSON-lines export."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["round", "skip", "rank", "to", "from", "blocks", "elements"])
    for rt in trace:
        for e in rt.entries:
            writer.writerow([rt.round_index, rt.skip, e.rank, e.to, e.frm,
                             e.blocks, e.elements])
    return buf.getvalue()
