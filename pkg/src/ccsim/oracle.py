"""Brute-force reference collectives.

Ground truth for the engine: plain rank-order folds and a literal
transpose, kept free of any engine helpers so equivalence tests are a real
cross-check.  O(p * m), which is fine for test scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blocks import BlockLayout, BlockVector
from .ops import ReductionOp


def _copied(seg):
    return seg.copy() if isinstance(seg, np.ndarray) else list(seg)


@dataclass(frozen=True)
class GlobalInput:
    """All p input vectors, sharing one layout."""

    layout: BlockLayout
    vectors: tuple[BlockVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "vectors", tuple(self.vectors))
        if len(self.vectors) != self.layout.p:
            raise ValueError(
                f"expected {self.layout.p} vectors, got {len(self.vectors)}")
        for r, v in enumerate(self.vectors):
            if v.layout != self.layout:
                raise ValueError(f"vector {r} does not share the layout")

    @property
    def p(self) -> int:
        return self.layout.p


def oracle_reduce_scatter(g: GlobalInput, op: ReductionOp) -> list:
    """result[r] = fold of V_0[r], V_1[r], ..., left to right."""
    out = []
    offs = g.layout.offsets
    for r in range(g.p):
        lo, hi = offs[r], offs[r + 1]
        acc = _copied(g.vectors[0].data[lo:hi])
        for i in range(1, g.p):
            acc = op.apply(acc, g.vectors[i].data[lo:hi])
        out.append(acc)
    return out


def oracle_allreduce(g: GlobalInput, op: ReductionOp) -> BlockVector:
    """Element-wise left-to-right fold of the whole vectors, in rank order."""
    acc = _copied(g.vectors[0].data)
    for i in range(1, g.p):
        acc = op.apply(acc, g.vectors[i].data)
    return BlockVector(g.layout, acc)


def oracle_allgather(layout: BlockLayout, blocks: Sequence) -> BlockVector:
    """Concatenation of every rank's own block in rank order."""
    if len(blocks) != layout.p:
        raise ValueError(f"expected {layout.p} blocks, got {len(blocks)}")
    if any(isinstance(b, np.ndarray) for b in blocks):
        data = np.concatenate([np.asarray(b) for b in blocks])
    else:
        data = [x for b in blocks for x in b]
    return BlockVector(layout, data)


def oracle_alltoall(g: GlobalInput) -> list[BlockVector]:
    """Block transpose: output_r block i = vectors[i] block r."""
    sizes = set(g.layout.sizes)
    if len(sizes) != 1:
        raise ValueError(
            f"regular all-to-all needs equal block sizes, got {sorted(sizes)}")
    offs = g.layout.offsets
    out = []
    for r in range(g.p):
        lo, hi = offs[r], offs[r + 1]
        out.append(oracle_allgather(
            g.layout, [_copied(g.vectors[i].data[lo:hi]) for i in range(g.p)]))
    return out
