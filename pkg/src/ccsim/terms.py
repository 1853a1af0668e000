"""Symbolic reduction terms.

A term records the exact bracketing of a block reduction: leaves are input
block indices, interior nodes are single operator applications with the
locally held operand on the left and the received operand on the right.
Terms are immutable, so they can be shipped through the simulated network
without copying.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Leaf:
    index: int


@dataclass(frozen=True)
class Combine:
    left: "Term"
    right: "Term"


Term = Union[Leaf, Combine]


def leaf_indices(term: Term) -> list[int]:
    """Leaf indices in left-to-right order."""
    if isinstance(term, Leaf):
        return [term.index]
    return leaf_indices(term.left) + leaf_indices(term.right)


def _summands(term: Term) -> list[Term]:
    # Flatten the left-leaning spine: ((a+b)+c)+d -> [a, b, c, d].
    if isinstance(term, Combine):
        return _summands(term.left) + [term.right]
    return [term]


def render(term: Term) -> str:
    """Render a term like ``x19+x8+(x13+x2)+(x16+x5)``.

    Left-nested chains print flat; anything hooked in as a sub-reduction
    keeps its parentheses, so the string shows which partial sums arrived
    already combined.
    """
    parts = []
    for t in _summands(term):
        if isinstance(t, Leaf):
            parts.append(f"x{t.index}")
        else:
            parts.append("(" + render(t) + ")")
    return "+".join(parts)
