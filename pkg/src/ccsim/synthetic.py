"""Deterministic synthetic inputs, reproducible from the seed alone.

Element values and layout sizes are derived by hashing (seed, rank, block)
with blake2b, so any failure replays exactly from the seed, independent of
platform or library versions.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .blocks import BlockLayout, BlockVector
from .terms import Leaf


def _digest_stream(tag: str, nbytes: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < nbytes:
        out += hashlib.blake2b(f"{tag}|{counter}".encode()).digest()
        counter += 1
    return bytes(out[:nbytes])


def int64_block(seed: int, rank: int, block: int, size: int) -> np.ndarray:
    raw = _digest_stream(f"{seed}|{rank}|{block}", size * 8)
    return np.frombuffer(raw, dtype="<i8").astype(np.int64, copy=True)


def float64_block(seed: int, rank: int, block: int, size: int) -> np.ndarray:
    bits = int64_block(seed, rank, block, size).view(np.uint64)
    # top 53 bits -> uniform in [0, 1); nonnegative keeps relative-error
    # verification meaningful for sums
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def random_sizes(seed: int, p: int, max_block: int) -> tuple[int, ...]:
    """p block sizes in [0, max_block], zeros included."""
    raw = _digest_stream(f"{seed}|sizes", p * 8)
    vals = np.frombuffer(raw, dtype="<u8")
    return tuple(int(v % (max_block + 1)) for v in vals)


def int_vectors(seed: int, layout: BlockLayout) -> list[BlockVector]:
    return [
        BlockVector.from_blocks(layout, [
            int64_block(seed, r, i, layout.sizes[i]) for i in range(layout.p)])
        for r in range(layout.p)
    ]


def float_vectors(seed: int, layout: BlockLayout) -> list[BlockVector]:
    return [
        BlockVector.from_blocks(layout, [
            float64_block(seed, r, i, layout.sizes[i]) for i in range(layout.p)])
        for r in range(layout.p)
    ]


def symbolic_vectors(p: int) -> list[BlockVector]:
    """Singleton leaf terms: rank r fills every block with x_r."""
    layout = BlockLayout.uniform(p, 1)
    return [BlockVector(layout, [Leaf(r)] * p) for r in range(p)]
