"""Block-partitioned vectors.

Every rank partitions its vector the same way into p blocks (sizes may
differ per block, zero included).  A BlockVector keeps the elements in one
contiguous buffer, either a numpy array for numeric domains or a plain list
for symbolic ones, addressed block-wise through the shared layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True)
class BlockLayout:
    sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes:
            raise ValueError("layout needs at least one block")
        if any(s < 0 for s in self.sizes):
            raise ValueError(f"block sizes must be >= 0, got {self.sizes}")

    @property
    def p(self) -> int:
        return len(self.sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        offs = [0]
        for s in self.sizes:
            offs.append(offs[-1] + s)
        return tuple(offs)

    @property
    def total(self) -> int:
        return self.offsets[-1]

    def span(self, i: int, j: int) -> tuple[int, int]:
        """Element range covered by blocks [i, j)."""
        return self.offsets[i], self.offsets[j]

    def rotated(self, r: int) -> "BlockLayout":
        """Layout as seen by rank r: block i has the size of global block (r+i) mod p."""
        return BlockLayout(self.sizes[r:] + self.sizes[:r])

    @classmethod
    def uniform(cls, p: int, block_elements: int) -> "BlockLayout":
        return cls((block_elements,) * p)

    @classmethod
    def spread(cls, p: int, total: int) -> "BlockLayout":
        """Split `total` elements over p blocks as evenly as possible."""
        base, extra = divmod(total, p)
        return cls(tuple(base + (1 if i < extra else 0) for i in range(p)))


@dataclass(eq=False)
class BlockVector:
    layout: BlockLayout
    data: Any  # np.ndarray or list, length == layout.total

    def __post_init__(self):
        if len(self.data) != self.layout.total:
            raise ValueError(
                f"data has {len(self.data)} elements, layout expects {self.layout.total}")

    @property
    def p(self) -> int:
        return self.layout.p

    def block(self, i: int):
        lo, hi = self.layout.span(i, i + 1)
        return self.data[lo:hi]

    def set_block(self, i: int, values) -> None:
        lo, hi = self.layout.span(i, i + 1)
        self.data[lo:hi] = values

    def run(self, i: int, j: int):
        """Fresh copy of the elements of blocks [i, j)."""
        lo, hi = self.layout.span(i, j)
        seg = self.data[lo:hi]
        return seg.copy() if isinstance(seg, np.ndarray) else seg

    def write_run(self, i: int, j: int, values) -> None:
        lo, hi = self.layout.span(i, j)
        if len(values) != hi - lo:
            raise ValueError(
                f"run [{i}, {j}) holds {hi - lo} elements, got {len(values)}")
        self.data[lo:hi] = values

    def copy(self) -> "BlockVector":
        data = self.data.copy() if isinstance(self.data, np.ndarray) else list(self.data)
        return BlockVector(self.layout, data)

    @classmethod
    def from_blocks(cls, layout: BlockLayout, blocks: Sequence) -> "BlockVector":
        if len(blocks) != layout.p:
            raise ValueError(f"expected {layout.p} blocks, got {len(blocks)}")
        for i, b in enumerate(blocks):
            if len(b) != layout.sizes[i]:
                raise ValueError(f"block {i} has {len(b)} elements, layout says {layout.sizes[i]}")
        if any(isinstance(b, np.ndarray) for b in blocks):
            data = np.concatenate([np.asarray(b) for b in blocks])
        else:
            data = []
            for b in blocks:
                data.extend(b)
        return cls(layout, data)
