"""Partition a camera trajectory into overlapping axis-aligned blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import AxisAlignedBox


@dataclass
class BlockLayout:
    blocks: list[AxisAlignedBox]
    camera_indices: list[list[int]]  # per block
    overlap_fraction: float


def _cover_1d(lo: float, hi: float, size: float, overlap: float):
    """Interval starts covering [lo, hi] with the given overlap between neighbours."""
    extent = hi - lo
    if extent <= size:
        return [lo]
    stride = size - overlap
    if stride <= 0:
        raise ValueError("overlap must be smaller than block size")
    count = int(np.ceil((extent - overlap) / stride))
    return [lo + i * stride for i in range(count)]


def partition_blocks(cameras, block_size: float, overlap: float) -> BlockLayout:
    """Tile the camera bounding box with blocks of `block_size` world units
    overlapping by `overlap` world units; every camera joins each block that
    contains it."""
    if not cameras:
        raise ValueError("need at least one camera")
    centers = np.stack([c.translation for c in cameras])
    lo = centers.min(axis=0)
    hi = centers.max(axis=0)
    starts = [_cover_1d(lo[k], hi[k], block_size, overlap) for k in range(3)]
    eps = 1e-9
    blocks, members = [], []
    for sx in starts[0]:
        for sy in starts[1]:
            for sz in starts[2]:
                box = AxisAlignedBox([sx, sy, sz],
                                     [sx + block_size, sy + block_size, sz + block_size])
                inside = np.flatnonzero(
                    np.all((centers >= box.lo - eps) & (centers <= box.hi + eps), axis=1)
                )
                if inside.size:
                    blocks.append(box)
                    members.append(inside.tolist())
    return BlockLayout(blocks, members, overlap / block_size)
