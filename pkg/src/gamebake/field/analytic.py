"""Closed-form field defined by plain callables.

Serves as a stand-in wherever a trained field would go: isosurface
extraction oracles, per-term loss fixtures, renderer tests. Callables take
world points (N, 3) (color also takes directions) and return numpy arrays.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from ..core import Tensor, concat


class AnalyticField:
    def __init__(self, density_fn, color_fn=None, semantic_fn=None, normal_fn=None,
                 density_tape_fn=None, n_classes=4, sky_class=0):
        self.density_fn = density_fn
        self.color_fn = color_fn or (lambda x, d: np.full((x.shape[0], 3), 0.5))
        self.semantic_fn = semantic_fn or (
            lambda x: np.tile(np.eye(n_classes)[1], (x.shape[0], 1))
        )
        self.normal_fn = normal_fn or (lambda x: np.tile([0.0, 0.0, 1.0], (x.shape[0], 1)))
        self.density_tape_fn = density_tape_fn  # Tensor -> Tensor, for exact normals
        self.cfg = SimpleNamespace(sky_class=sky_class, n_classes=n_classes)

    def density_normal(self, x, eps=1e-8):
        """Exact tape-gradient normal; requires `density_tape_fn`."""
        if self.density_tape_fn is None:
            raise ValueError("no differentiable density closure provided")
        x = np.atleast_2d(x)
        xt = Tensor(x.copy(), requires_grad=True)
        self.density_tape_fn(xt).sum().backward()
        g = xt.grad if xt.grad is not None else np.zeros_like(x)
        norms = np.linalg.norm(g, axis=-1)
        degenerate = norms < eps
        n = np.where(degenerate[:, None], [[0.0, 0.0, 1.0]], -g / np.maximum(norms, eps)[:, None])
        return n, degenerate

    def density(self, x) -> Tensor:
        return Tensor(np.asarray(self.density_fn(np.atleast_2d(x)), dtype=np.float64))

    def density_values(self, x, chunk=None) -> np.ndarray:
        return self.density(x).data

    def density_from_contract(self, y) -> Tensor:
        from ..core.contract import uncontract

        return self.density(uncontract(np.atleast_2d(y)))

    def density_normal_fd(self, x, h=1e-3, eps=1e-8) -> Tensor:
        x = np.atleast_2d(x)
        grads = []
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            grads.append((self.density(x + dx) - self.density(x - dx)) * (0.5 / h))
        g = concat([gk.reshape(-1, 1) for gk in grads], axis=1)
        return -(g.normalize(axis=-1, eps=eps))

    def point_quantities(self, x, d, want_semantics=False, want_normal=False,
                         want_density_normal=False, normal_fd_h=1e-3):
        x = np.atleast_2d(x)
        out = {"sigma": self.density(x), "rgb": Tensor(self.color_fn(x, np.atleast_2d(d)))}
        if want_semantics:
            out["sem"] = Tensor(self.semantic_fn(x))
        if want_normal:
            out["n_mlp"] = Tensor(self.normal_fn(x))
        if want_density_normal:
            out["n_dens"] = self.density_normal_fd(x, h=normal_fd_h)
        return out
