"""Multi-resolution hash-grid feature encoder.

Each level is a hash table of learnable feature rows; a query point is
trilinearly interpolated from the 8 lattice corners of its cell, corner
rows addressed by the spatial hash

    h(v) = (v_x * 1  xor  v_y * 2654435761  xor  v_z * 805459861) mod 2^T.

The encoder covers the contract domain [-2, 2]^3; queries outside are
clamped and counted on ``clamp_warnings``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .tensor import Tensor


class FeatureGrid:
    def __init__(
        self,
        levels: int = 8,
        features_per_level: int = 4,
        log2_table_size: int = 15,
        base_resolution: int = 16,
        per_level_scale: float = 1.5,
        rng: np.random.Generator | None = None,
        init_scale: float = 1e-2,
    ):
        self.levels = levels
        self.features_per_level = features_per_level
        self.log2_table_size = log2_table_size
        self.base_resolution = base_resolution
        self.per_level_scale = per_level_scale
        self.resolutions = np.array(
            [int(np.floor(base_resolution * per_level_scale**i)) for i in range(levels)],
            dtype=np.int64,
        )
        table_size = 1 << log2_table_size
        rng = rng or np.random.default_rng(0)
        data = rng.uniform(-init_scale, init_scale, size=(levels, table_size, features_per_level))
        self.tables = Tensor(data, requires_grad=True, name="tables")
        self.clamp_warnings = 0

    @property
    def output_dim(self) -> int:
        return self.levels * self.features_per_level

    def params(self):
        return [self.tables]

    def _normalize(self, x: np.ndarray) -> np.ndarray:
        x01 = (np.asarray(x, dtype=np.float64) + 2.0) / 4.0
        if np.any(x01 < 0.0) or np.any(x01 > 1.0):
            self.clamp_warnings += int(np.any((x01 < 0.0) | (x01 > 1.0), axis=-1).sum())
            x01 = np.clip(x01, 0.0, 1.0)
        return x01

    def encode(self, x) -> Tensor:
        """Encode points (N, 3) in contract space; differentiable w.r.t.
        tables and, when `x` is a Tensor, w.r.t. the points themselves."""
        x_t = x if isinstance(x, Tensor) else None
        x01 = self._normalize(x.data if x_t is not None else x)
        tables = self.tables
        res = self.resolutions
        out = kernels.encode_forward(tables.data, x01, res)

        def bw(g):
            need_x = x_t is not None and x_t._tracked()
            gt, gx = kernels.encode_backward(tables.data, x01, res, g, need_x)
            tables._accum(gt)
            if need_x:
                # chain through the [-2,2] -> [0,1] rescale
                x_t._accum(gx * 0.25)

        parents = (tables, x_t) if x_t is not None else (tables,)
        return Tensor._make(out, parents, bw)
