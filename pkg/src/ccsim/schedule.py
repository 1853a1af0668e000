"""Circulant-graph skip schedules and the reduction trees they induce.

A schedule for ``p`` ranks is a strictly decreasing list of skips
``[s1, ..., sq]`` with ``sq == 1`` (empty for ``p == 1``).  The loop-entry
value ``s0 == p`` is implicit: round ``k`` sends the ``s_{k-1} - s_k``
partial-result blocks ``R[s_k .. s_{k-1}-1]`` to rank ``(r + s_k) mod p``
and receives the matching run from ``(r - s_k) mod p``.  Summed over all
rounds each rank moves exactly ``p - 1`` blocks.

Replaying the rounds hooks block label ``j`` under ``j - s_k`` whenever
``s_k <= j < s_{k-1}``, which yields the spanning tree each rank implicitly
reduces over; ``build_tree`` materialises it and ``reduction_order``
extracts the exact bracketing of the reduction it performs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

from .terms import Combine, Leaf, Term

SCHEMES = ("halving", "doubling", "linear", "sqrt", "custom")


class ScheduleError(ValueError):
    """Schedule cannot drive a correct collective."""


def ceil_log2(p: int) -> int:
    if p < 1:
        raise ValueError(f"rank count must be >= 1, got {p}")
    return (p - 1).bit_length()


@dataclass(frozen=True)
class SkipSchedule:
    """Skips used in each communication round, largest first.

    ``skips`` excludes the implicit entry value ``s0 == p``; it matches the
    rounds one-to-one, so ``len(skips)`` is the round count.
    """

    p: int
    skips: tuple[int, ...]
    scheme: str = "custom"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"rank count must be >= 1, got {self.p}")
        object.__setattr__(self, "skips", tuple(int(s) for s in self.skips))

    @property
    def rounds(self) -> int:
        return len(self.skips)

    def bounds(self) -> tuple[int, ...]:
        """(s0, s1, ..., sq) with the implicit s0 = p restored."""
        return (self.p, *self.skips)


def halving_skips(p: int) -> SkipSchedule:
    """Skips from repeatedly halving p with rounding up, down to 1.

    Gives ceil(log2(p)) rounds and never a run longer than ceil(p/2).
    """
    skips = []
    s = int(p)
    if s < 1:
        raise ValueError(f"rank count must be >= 1, got {p}")
    while s > 1:
        s = (s + 1) // 2
        skips.append(s)
    return SkipSchedule(p, tuple(skips), "halving")


def doubling_skips(p: int) -> SkipSchedule:
    """Power-of-two skips: largest power of two below p, then halve to 1."""
    if p < 1:
        raise ValueError(f"rank count must be >= 1, got {p}")
    if p == 1:
        return SkipSchedule(1, (), "doubling")
    s = 1 << (ceil_log2(p) - 1)  # largest power of two strictly below p
    skips = []
    while s >= 1:
        skips.append(s)
        s //= 2
    return SkipSchedule(p, tuple(skips), "doubling")


def linear_skips(p: int) -> SkipSchedule:
    """One block per round: skips p-1, p-2, ..., 1 (fully connected scheme)."""
    if p < 1:
        raise ValueError(f"rank count must be >= 1, got {p}")
    return SkipSchedule(p, tuple(range(p - 1, 0, -1)), "linear")


def sqrt_skips(p: int) -> SkipSchedule:
    """About sqrt(p) rounds: step down by ceil(sqrt(p)), then halve.

    Emits p - k*ceil(sqrt(p)) while that stays above ceil(sqrt(p)), then
    continues with the halving rule from the last emitted value (from p
    itself when the prefix is empty).
    """
    if p < 1:
        raise ValueError(f"rank count must be >= 1, got {p}")
    c = math.isqrt(p)
    if c * c < p:
        c += 1
    skips = []
    k = 1
    while p - k * c > c:
        skips.append(p - k * c)
        k += 1
    s = skips[-1] if skips else p
    while s > 1:
        s = (s + 1) // 2
        skips.append(s)
    return SkipSchedule(p, tuple(skips), "sqrt")


GENERATORS = {
    "halving": halving_skips,
    "doubling": doubling_skips,
    "linear": linear_skips,
    "sqrt": sqrt_skips,
}


def run_lengths(schedule: SkipSchedule) -> list[int]:
    """Blocks exchanged per round: [s0-s1, s1-s2, ..., s_{q-1}-sq], s0 = p."""
    b = schedule.bounds()
    return [b[k] - b[k + 1] for k in range(len(b) - 1)]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    p: int
    skips: tuple[int, ...]
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def summary(self) -> str:
        if self.ok:
            return f"schedule {list(self.skips)} for p={self.p}: all checks pass"
        lines = [f"schedule {list(self.skips)} for p={self.p} is invalid:"]
        lines += [f"  {c.name}: {c.detail}" for c in self.failures]
        return "\n".join(lines)


def _unrepresentable(p: int, skips: tuple[int, ...]) -> list[int]:
    # Subset-sum over the skips, bit i of `reachable` <=> offset i is a sum
    # of distinct skips.  O(q * p / wordsize) with big-int shifts.
    mask = (1 << p) - 1
    reachable = 1
    for s in skips:
        if 0 < s < p:
            reachable |= (reachable << s) & mask
    return [i for i in range(1, p) if not (reachable >> i) & 1]


def validate_schedule(schedule: SkipSchedule) -> ValidationReport:
    """Check every schedule invariant; reports failures, never raises.

    Besides the structural checks (strictly decreasing, ends at 1, first
    skip below p, run lengths summing to p-1) this verifies that every
    offset 0 < i < p is a sum of pairwise distinct skips, and that no round
    moves more blocks than its skip.  The latter matters because a round
    that sends R[s..s'-1] also folds received blocks into R[0..s'-s-1]; if
    those ranges overlapped, contributions folded into already-sent blocks
    would never reach the root.
    """
    p, skips = schedule.p, schedule.skips
    checks = []

    dec = all(a > b for a, b in zip(skips, skips[1:]))
    checks.append(CheckResult(
        "strictly_decreasing", dec,
        "" if dec else f"skips must strictly decrease, got {list(skips)}"))

    if p == 1:
        term_ok = not skips
        term_detail = "" if term_ok else "p=1 admits no communication rounds"
    else:
        term_ok = bool(skips) and skips[-1] == 1
        term_detail = "" if term_ok else "last skip must be 1"
    checks.append(CheckResult("terminates_at_one", term_ok, term_detail))

    first_ok = not skips or 0 < skips[0] < p
    checks.append(CheckResult(
        "first_skip_below_p", first_ok,
        "" if first_ok else f"first skip {skips[0]} not in (0, {p})"))

    unrep = _unrepresentable(p, skips)
    checks.append(CheckResult(
        "representability", not unrep,
        "" if not unrep else "not a sum of distinct skips: "
        + ", ".join(f"i={i}" for i in unrep[:16])
        + (f" (+{len(unrep) - 16} more)" if len(unrep) > 16 else "")))

    total = sum(run_lengths(schedule)) if dec and first_ok else None
    sum_ok = total == p - 1
    checks.append(CheckResult(
        "run_length_sum", sum_ok,
        "" if sum_ok else f"runs sum to {total}, expected p-1 = {p - 1}"))

    b = schedule.bounds()
    overlaps = [k for k in range(len(skips)) if b[k] - b[k + 1] > b[k + 1]]
    checks.append(CheckResult(
        "round_capacity", not overlaps,
        "" if not overlaps else "rounds "
        + ", ".join(str(k) for k in overlaps)
        + " move more blocks than their skip; sent and updated runs overlap"))

    return ValidationReport(p, skips, tuple(checks))


@dataclass(frozen=True, eq=False)
class ReductionTree:
    """Spanning tree over block labels 0..p-1, rooted at 0.

    ``parent[i] == i - edge_skip[i]`` for every non-root label; a node's
    child edges carry pairwise distinct skips because each child was hooked
    in a different round.
    """

    p: int
    parent: dict[int, int]
    edge_skip: dict[int, int]

    root = 0

    @cached_property
    def _children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {}
        for label, par in self.parent.items():
            kids.setdefault(par, []).append(label)
        # Hooking order: the earliest round has the largest skip.
        return {
            i: tuple(sorted(ls, key=lambda l: -self.edge_skip[l]))
            for i, ls in kids.items()
        }

    def children(self, label: int) -> tuple[int, ...]:
        """Children of a node in hooking order (largest edge skip first)."""
        return self._children.get(label, ())

    def path_skips(self, label: int) -> tuple[int, ...]:
        """Edge skips from a node up to the root."""
        out = []
        while label != self.root:
            out.append(self.edge_skip[label])
            label = self.parent[label]
        return tuple(out)


def build_tree(schedule: SkipSchedule) -> ReductionTree:
    """Replay the per-round hooking and return the resulting tree.

    In the round with previous bound s' and skip s, every live root j with
    s <= j < s' is hooked under j - s by an edge labelled s.  A valid
    schedule leaves exactly the root 0 live.
    """
    report = validate_schedule(schedule)
    if not report.ok:
        raise ScheduleError(report.summary())
    parent: dict[int, int] = {}
    edge_skip: dict[int, int] = {}
    upper = schedule.p
    for s in schedule.skips:
        for label in range(s, upper):
            parent[label] = label - s
            edge_skip[label] = s
        upper = s
    if schedule.p > 1 and upper != 1:
        raise ScheduleError(
            f"hooking left roots 0..{upper - 1}, not a single tree")
    return ReductionTree(schedule.p, parent, edge_skip)


def reduction_order(tree: ReductionTree, rank: int, p: int | None = None) -> Term:
    """Bracketed reduction term computed for ``rank``'s result block.

    Tree label i contributes the input of rank (rank - i) mod p; each node
    folds its own leaf with its children's sub-terms in hooking order,
    which is exactly the order the partial sums arrive.
    """
    if p is None:
        p = tree.p
    if p != tree.p:
        raise ValueError(f"rank count {p} does not match tree ({tree.p})")
    if not 0 <= rank < p:
        raise ValueError(f"rank {rank} out of range for p={p}")

    def subtree(label: int) -> Term:
        term: Term = Leaf((rank - label) % p)
        for child in tree.children(label):
            term = Combine(term, subtree(child))
        return term

    return subtree(tree.root)


def tree_to_dot(tree: ReductionTree) -> str:
    """DOT text with child->parent edges annotated by their skip."""
    lines = ["digraph reduction_tree {"]
    for i in range(tree.p):
        lines.append(f"  {i};")
    for label in sorted(tree.parent):
        lines.append(f"  {label} -> {tree.parent[label]} [label={tree.edge_skip[label]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def schedule_to_json(schedule: SkipSchedule) -> str:
    """Skips as a JSON array, e.g. ``[11, 6, 3, 2, 1]``."""
    return json.dumps(list(schedule.skips))
