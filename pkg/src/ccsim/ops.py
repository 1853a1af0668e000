"""Reduction operators over element runs.

``apply(local, received)`` combines two equal-length runs; the engine always
passes its own accumulated values on the left and the received values on the
right.  ``elementwise`` operators combine position-by-position, so the engine
may fold a whole multi-block run in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .terms import Combine


@dataclass(frozen=True)
class ReductionOp:
    name: str
    apply: Callable
    commutative: bool = True
    elementwise: bool = True


def _wrapping_add(a, b):
    # int64 array addition wraps modulo 2**64, giving exact, associative sums.
    return np.add(a, b)


def _float_add(a, b):
    return np.add(a, b)


INT64_SUM = ReductionOp("int64_sum", _wrapping_add)

FLOAT64_SUM = ReductionOp("float64_sum", _float_add)


def make_symbolic_op() -> ReductionOp:
    """Operator that records each application as a term.

    Blocks are lists of terms; apply() combines them pairwise, keeping the
    (local, received) operand order.  Running a collective on singleton
    leaf terms therefore yields the exact bracketed expression the engine
    computed.  Not commutative: terms record order, so runs need the
    non-commutative override.
    """

    def combine(a, b):
        return [Combine(x, y) for x, y in zip(a, b, strict=True)]

    return ReductionOp("symbolic_combine", combine, commutative=False)
