"""Analytic time estimates under the homogeneous linear-affine cost model.

A round of concurrent bidirectional exchange of n elements is charged
alpha + beta * n; reducing n elements costs gamma * n.  Pass integers or
`fractions.Fraction` parameters to keep every value exact; floats work but
forfeit exact-equality comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .schedule import ceil_log2
from .transport import Metrics


@dataclass(frozen=True)
class CostParams:
    alpha: object = 0  # start-up latency per round
    beta: object = 0   # transmission time per element
    gamma: object = 0  # reduction time per element

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def uniform_volume(p: int, m: int):
    """Per-rank exchanged (and reduced) elements: (p-1)/p * m for divisible
    m, (p-1)*ceil(m/p) per-block accounting otherwise."""
    if p == 1:
        return 0
    if m % p == 0:
        return Fraction(m * (p - 1), p)
    return (p - 1) * _ceil_div(m, p)


def uniform_reduce_scatter_cost(p: int, m: int, params: CostParams, *,
                                include_initial_copy: bool = False):
    """alpha*ceil(log2 p) + beta*(p-1)/p*m + gamma*(p-1)/p*m.

    With `include_initial_copy` the rotation of the input into the working
    buffer is charged as well, adding gamma*m.
    """
    volume = uniform_volume(p, m)
    t = params.alpha * ceil_log2(p) + params.beta * volume + params.gamma * volume
    if include_initial_copy:
        t += params.gamma * m
    return t


def irregular_upper_bound(p: int, m: int, params: CostParams):
    """ceil(log2 p) * (alpha + beta*m + gamma*m): every round moves and
    reduces at most the whole vector, however lopsided the partition."""
    return ceil_log2(p) * (params.alpha + params.beta * m + params.gamma * m)


def allreduce_cost(p: int, m: int, params: CostParams):
    """alpha*2*ceil(log2 p) + beta*2*(p-1)/p*m + gamma*(p-1)/p*m.

    Assembled from the allreduce counts (2*ceil(log2 p) rounds, 2*(p-1)
    blocks moved, p-1 blocks reduced per rank); there is no closed-form
    counterpart of the reduce-scatter formula to quote.
    """
    volume = uniform_volume(p, m)
    return (params.alpha * 2 * ceil_log2(p)
            + params.beta * 2 * volume
            + params.gamma * volume)


def measured_cost(metrics: Metrics, params: CostParams, elements_reduced=None):
    """Charge a finished run: alpha per round, beta on the max per-rank
    elements sent, gamma on the max per-rank elements reduced.

    For uniform layouts under any valid schedule this equals the analytic
    reduce-scatter (or allreduce) formula exactly.
    """
    reduced = metrics.elements_reduced if elements_reduced is None else tuple(elements_reduced)
    sent = max(metrics.elements_sent, default=0)
    red = max(reduced, default=0)
    return params.alpha * metrics.rounds + params.beta * sent + params.gamma * red
