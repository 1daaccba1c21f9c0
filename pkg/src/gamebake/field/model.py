"""The radiance field: two hash grids plus per-quantity MLP headers.

Density runs on its own grid; color, semantics and predicted normals share a
second grid. Density uses softplus, color sigmoid, semantics softmax; the
normal header is unconstrained and normalized afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..core import FeatureGrid, Tensor, TinyMlp, concat
from ..core.contract import contract
from ..geometry import normalized


@dataclass
class FieldConfig:
    grid_levels: int = 8
    grid_features: int = 4
    grid_log2: int = 15
    grid_base_res: int = 16
    grid_growth: float = 1.5
    density_hidden: tuple = (64,)
    color_hidden: tuple = (64,)
    semantic_hidden: tuple = (24,)
    normal_hidden: tuple = (24,)
    n_classes: int = 4
    sky_class: int = 0

    @classmethod
    def paper_scale(cls):
        """Full-size preset: 16 levels, 8 features, T=19/21, 128-wide headers."""
        return cls(
            grid_levels=16, grid_features=8, grid_log2=19, grid_base_res=16,
            grid_growth=1.447, density_hidden=(128, 128), color_hidden=(128, 128),
            semantic_hidden=(128, 128), normal_hidden=(128, 128),
        )

    @classmethod
    def tiny(cls):
        """Smoke-test scale."""
        return cls(grid_levels=4, grid_features=2, grid_log2=12, density_hidden=(16,),
                   color_hidden=(16,), semantic_hidden=(8,), normal_hidden=(8,))


class RadianceField:
    def __init__(self, cfg: FieldConfig | None = None, seed: int = 0):
        self.cfg = cfg = cfg or FieldConfig()
        ss = np.random.SeedSequence(seed)
        rngs = [np.random.default_rng(s) for s in ss.spawn(6)]
        self.density_grid = FeatureGrid(cfg.grid_levels, cfg.grid_features, cfg.grid_log2,
                                        cfg.grid_base_res, cfg.grid_growth, rng=rngs[0])
        self.color_grid = FeatureGrid(cfg.grid_levels, cfg.grid_features, cfg.grid_log2,
                                      cfg.grid_base_res, cfg.grid_growth, rng=rngs[1])
        fdim = self.density_grid.output_dim
        self.density_mlp = TinyMlp([fdim, *cfg.density_hidden, 1], "softplus", rngs[2], "density")
        self.color_mlp = TinyMlp([fdim + 3, *cfg.color_hidden, 3], "sigmoid", rngs[3], "color")
        self.semantic_mlp = TinyMlp([fdim, *cfg.semantic_hidden, cfg.n_classes], "softmax",
                                    rngs[4], "semantic")
        self.normal_mlp = TinyMlp([fdim, *cfg.normal_hidden, 3], "none", rngs[5], "normal")
        # start close to empty space so the sparsity/sky terms have less to undo
        self.density_mlp.biases[-1].data[:] = -1.0

    # -- parameters ----------------------------------------------------------

    def named_params(self) -> dict[str, Tensor]:
        out = {"density_grid.tables": self.density_grid.tables,
               "color_grid.tables": self.color_grid.tables}
        for mlp in (self.density_mlp, self.color_mlp, self.semantic_mlp, self.normal_mlp):
            for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
                out[f"{mlp.name}.w{i}"] = w
                out[f"{mlp.name}.b{i}"] = b
        return out

    def params(self):
        return list(self.named_params().values())

    def state_dict(self):
        return {k: v.data for k, v in self.named_params().items()}

    def load_state_dict(self, state):
        for k, v in self.named_params().items():
            v.data = np.array(state[k], dtype=np.float64).reshape(v.data.shape)

    # -- queries ------------------------------------------------------------------

    def density_from_contract(self, y) -> Tensor:
        """Density at points already in contract space (y may be a Tensor)."""
        return self.density_mlp(self.density_grid.encode(y)).reshape(-1)

    def density(self, x: np.ndarray) -> Tensor:
        """Density at world points (N, 3)."""
        return self.density_from_contract(contract(x))

    def density_values(self, x: np.ndarray, chunk=262144) -> np.ndarray:
        x = np.atleast_2d(x)
        parts = [self.density(x[i : i + chunk]).data for i in range(0, x.shape[0], chunk)]
        return np.concatenate(parts) if parts else np.zeros(0)

    def query(self, x: np.ndarray, d: np.ndarray):
        """Full field query at world points: (sigma, color, semantics, normal_mlp).

        `d` must hold unit view directions, one per point.
        """
        x = np.atleast_2d(x)
        d = np.atleast_2d(d)
        if not np.allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-6):
            raise ValueError("view directions must be normalized")
        q = self.point_quantities(x, d, want_semantics=True, want_normal=True)
        return q["sigma"], q["rgb"], q["sem"], q["n_mlp"]

    def point_quantities(self, x, d, want_semantics=False, want_normal=False,
                         want_density_normal=False, normal_fd_h=1e-3):
        """Per-point tape quantities consumed by the renderer."""
        y = contract(np.atleast_2d(x))
        out = {"sigma": self.density_from_contract(y)}
        feat = self.color_grid.encode(y)
        out["rgb"] = self.color_mlp(concat([feat, Tensor(np.atleast_2d(d))], axis=1))
        if want_semantics:
            out["sem"] = self.semantic_mlp(feat)
        if want_normal:
            out["n_mlp"] = self.normal_mlp(feat).normalize(axis=-1)
        if want_density_normal:
            out["n_dens"] = self.density_normal_fd(x, h=normal_fd_h)
        return out

    def density_normal(self, x: np.ndarray, eps=1e-8):
        """Unit normal from the density gradient, n = -grad/|grad|, via the tape.

        Returns (normals, degenerate_mask); degenerate points fall back to
        (0, 0, 1).
        """
        x = np.atleast_2d(x)
        xt = Tensor(x.copy(), requires_grad=True)
        from ..core.contract import contract_t

        sigma = self.density_from_contract(contract_t(xt))
        sigma.sum().backward()
        g = xt.grad if xt.grad is not None else np.zeros_like(x)
        norms = np.linalg.norm(g, axis=-1)
        degenerate = norms < eps
        n = np.where(degenerate[:, None], [[0.0, 0.0, 1.0]], -g / np.maximum(norms, eps)[:, None])
        return n, degenerate

    def density_normal_fd(self, x: np.ndarray, h: float = 1e-3, eps: float = 1e-8) -> Tensor:
        """Central-difference density normal as a tape quantity.

        First-order in the parameters, so the normal-consistency loss built on
        it stays exactly differentiable (the analytic-gradient route would
        need second derivatives).
        """
        x = np.atleast_2d(x)
        grads = []
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            grads.append((self.density(x + dx) - self.density(x - dx)) * (0.5 / h))
        g = concat([gk.reshape(-1, 1) for gk in grads], axis=1)
        return -(g.normalize(axis=-1, eps=eps))

    def semantic_argmax(self, x: np.ndarray) -> np.ndarray:
        y = contract(np.atleast_2d(x))
        sem = self.semantic_mlp(self.color_grid.encode(y))
        return sem.data.argmax(axis=-1)
