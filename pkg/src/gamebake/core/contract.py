"""Radial scene contraction squeezing unbounded coordinates into a radius-2 ball.

Points inside the unit ball are untouched; outside, a point at radius r maps
to radius 2 - 1/r, so all of space lands strictly inside radius 2 while the
map stays continuous, injective and monotone in the radial direction.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def contract(x: np.ndarray) -> np.ndarray:
    """Map world points (..., 3) into the radius-2 contract ball."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("contract: non-finite input")
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    rs = np.maximum(r, 1.0)
    outer = (2.0 - 1.0 / rs) * (x / rs)
    return np.where(r <= 1.0, x, outer)


def contract_t(x: Tensor) -> Tensor:
    """Tape version of :func:`contract` (differentiable a.e.)."""
    if not np.all(np.isfinite(x.data)):
        raise ValueError("contract: non-finite input")
    r2 = (x * x).sum(axis=-1, keepdims=True)
    r = r2.maximum(1e-24).sqrt()
    rs = r.maximum(1.0)
    outer = x * ((2.0 - 1.0 / rs) / rs)
    inner_mask = (r.data <= 1.0).astype(np.float64)
    return x * inner_mask + outer * (1.0 - inner_mask)


def uncontract(y: np.ndarray) -> np.ndarray:
    """Inverse map; defined for ||y|| < 2."""
    y = np.asarray(y, dtype=np.float64)
    m = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(m >= 2.0):
        raise ValueError("uncontract: point outside the contract ball")
    ms = np.maximum(m, 1.0)
    r = 1.0 / (2.0 - ms)
    outer = y * (r / ms)
    return np.where(m <= 1.0, y, outer)
