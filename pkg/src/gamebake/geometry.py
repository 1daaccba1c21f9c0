"""Shared primitive types used by the scene, field and physics layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Ray:
    origin: np.ndarray  # (3,) world units
    direction: np.ndarray  # (3,) unit norm
    near: float = 0.05
    far: float = 20.0

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        n = np.linalg.norm(self.direction)
        if not np.isclose(n, 1.0, atol=1e-9):
            self.direction = self.direction / n
        if not 0.0 <= self.near < self.far:
            raise ValueError(f"require 0 <= near < far, got [{self.near}, {self.far}]")

    def at(self, t):
        return self.origin + np.multiply.outer(np.asarray(t), self.direction)


@dataclass
class AxisAlignedBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def as_list(self):
        return [*self.lo.tolist(), *self.hi.tolist()]


def normalized(v, axis=-1, eps=1e-12):
    v = np.asarray(v, dtype=np.float64)
    return v / np.maximum(np.linalg.norm(v, axis=axis, keepdims=True), eps)
