"""The six-term training loss and scale/shift depth alignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Tensor, concat
from .render import RenderSettings, render_rays


@dataclass
class LossWeights:
    rgb: float = 1.0
    depth: float = 0.05
    normal: float = 1e-3
    semantic: float = 0.01
    sky: float = 1e-3
    sparsity: float = 1e-3
    alpha: float = 0.01  # sparsity sharpness

    def __post_init__(self):
        vals = [self.rgb, self.depth, self.normal, self.semantic, self.sky, self.sparsity, self.alpha]
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("loss weights must be finite and non-negative")


def depth_align(d_render: np.ndarray, d_mono: np.ndarray, mask=None):
    """Closed-form least-squares (a, b) minimizing ||a*d_render + b - d_mono||^2.

    Returns (a, b, degenerate). A constant d_render cannot fix a scale; the
    fallback is a=1 with b matching the means, flagged degenerate.
    """
    d = np.asarray(d_render, dtype=np.float64)
    g = np.asarray(d_mono, dtype=np.float64)
    if mask is not None:
        d, g = d[mask], g[mask]
    if d.size < 2:
        raise ValueError("need at least two unmasked entries")
    n = d.size
    sx, sy = d.sum(), g.sum()
    sxx, sxy = (d * d).sum(), (d * g).sum()
    den = n * sxx - sx * sx
    if den <= 1e-12 * max(n * sxx, 1.0):
        return 1.0, float((g - d).mean()), True
    a = (n * sxy - sx * sy) / den
    b = (sy - a * sx) / n
    return float(a), float(b), False


def _depth_align_t(depth_t: Tensor, d_mono: np.ndarray):
    """On-tape alignment; gradients flow through (a, b) into the rendered depth."""
    n = float(d_mono.size)
    g = Tensor(d_mono)
    sx = depth_t.sum()
    sy = float(d_mono.sum())
    sxx = (depth_t * depth_t).sum()
    sxy = (depth_t * g).sum()
    den_val = n * sxx.data - sx.data * sx.data
    if den_val <= 1e-12 * max(n * float(sxx.data), 1.0):
        a = Tensor(1.0)
        b = (g - depth_t).mean()
        return a, b, True
    a = (sxy * n - sx * sy) * (1.0 / (sxx * n - sx * sx))
    b = (sy - a * sx) * (1.0 / n)
    return a, b, False


def sparsity_points(rng, n):
    """Uniform free-space probes in the [-1,1]^3 contract cube."""
    return rng.uniform(-1.0, 1.0, size=(n, 3))


def total_loss(field, batch: dict, weights: LossWeights, settings: RenderSettings,
               rng, n_sparsity=128, normal_rays=96, normal_fd_h=1e-3):
    """Weighted sum of the six terms plus a per-term breakdown.

    `batch` carries: origins, dirs, rgb (all required); optionally
    depth/depth_valid, normal_world/normal_valid, sem/sem_valid, frame (per-ray
    frame index for depth alignment). Absent cues make their term None in the
    breakdown (skipped, not zero). `rng=None` uses midpoint sampling and
    seed-0 sparsity probes.
    """
    sp_rng = rng if rng is not None else np.random.default_rng(0)
    res = render_rays(field, batch["origins"], batch["dirs"], settings, rng=rng,
                      want_semantics=True, want_normal=True)
    R = batch["origins"].shape[0]
    terms: dict[str, Tensor | None] = {}

    diff = res.color - batch["rgb"]
    terms["rgb"] = (diff * diff).sum(axis=-1).mean()

    # depth: align per frame over the rays present in this batch
    if "depth" in batch:
        valid = batch.get("depth_valid", np.ones(R, bool)) & (batch["depth"] > 0)
        parts = []
        count = 0
        for fr in np.unique(batch["frame"][valid]):
            sel = np.flatnonzero(valid & (batch["frame"] == fr))
            if sel.size < 2:
                continue
            d_t = res.depth[sel]
            a, b, _ = _depth_align_t(d_t, batch["depth"][sel])
            r = d_t * a + b - batch["depth"][sel]
            parts.append((r * r).sum())
            count += sel.size
        terms["depth"] = (
            concat([p.reshape(1) for p in parts]).sum() * (1.0 / count) if count else Tensor(0.0)
        )
    else:
        terms["depth"] = None

    # normals: two-term consistency on confidently opaque rays
    if "normal_world" in batch:
        nvalid = batch.get("normal_valid", np.ones(R, bool)) & (res.opacity.data > 0.5)
        sel = np.flatnonzero(nvalid)[:normal_rays]
        if sel.size:
            S = res.tvals.shape[1]
            pts = (batch["origins"][sel, None, :]
                   + res.tvals[sel][..., None] * batch["dirs"][sel, None, :])
            n_dens = field.density_normal_fd(pts.reshape(-1, 3), h=normal_fd_h)
            from .render import composite

            comp = composite(res_sigma_rows(field, res, sel, pts), res.tvals[sel], settings.far,
                             {"nd": n_dens.reshape(sel.size, S, 3)})
            n_mlp = res.normal_mlp[sel]
            d1 = n_mlp - batch["normal_world"][sel]
            d2 = n_mlp - comp["nd"]
            terms["normal"] = ((d1 * d1).sum(axis=-1) + (d2 * d2).sum(axis=-1)).mean()
        else:
            terms["normal"] = Tensor(0.0)
    else:
        terms["normal"] = None

    # semantics: cross-entropy of rendered class probabilities
    if "sem" in batch:
        svalid = batch.get("sem_valid", np.ones(R, bool))
        sel = np.flatnonzero(svalid)
        if sel.size:
            probs = res.semantics[(sel, batch["sem"][sel])]
            terms["semantic"] = -(probs.maximum(1e-7).log().mean())
        else:
            terms["semantic"] = Tensor(0.0)
    else:
        terms["semantic"] = None

    # sky: push rendered-sky rays to large depth
    sky_mask = res.semantics.data.argmax(axis=-1) == field.cfg.sky_class
    sel = np.flatnonzero(sky_mask)
    terms["sky"] = (-res.depth[sel]).exp().mean() if sel.size else Tensor(0.0)

    # sparsity on uniform free-space probes
    pts = sparsity_points(sp_rng, n_sparsity)
    sig = field.density_from_contract(pts)
    terms["sparsity"] = (1.0 - (sig * (-weights.alpha)).exp()).mean()

    lam = {"rgb": weights.rgb, "depth": weights.depth, "normal": weights.normal,
           "semantic": weights.semantic, "sky": weights.sky, "sparsity": weights.sparsity}
    total = None
    for name, term in terms.items():
        if term is None:
            continue
        piece = term * lam[name]
        total = piece if total is None else total + piece
    breakdown = {k: (float(v.data) if v is not None else None) for k, v in terms.items()}
    return total, breakdown, res


def res_sigma_rows(field, res, sel, pts):
    """Densities for the selected rays, recomputed so the subset composite
    stays a pure function of the parameters."""
    sig = field.density(pts.reshape(-1, 3))
    return sig.reshape(sel.size, res.tvals.shape[1])
