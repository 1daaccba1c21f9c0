"""Ray sampling and alpha compositing.

Compositing is a single custom tape op running front to back over samples
(vectorized across rays), so it is bit-identical to a straight scalar loop
and its backward pass is closed-form: with a = sigma*delta, e = exp(-a),
w_i = T_i * (1 - e_i) and T the running product of e,

    dL/da_i = e_i * T_i * q_i - sum_{k>i} q_k w_k,   q_i = dL/dw_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Tensor


@dataclass
class RenderSettings:
    near: float = 0.5
    far: float = 6.0
    n_samples: int = 48
    chunk: int = 8192


@dataclass
class RenderResult:
    color: Tensor  # (R,3)
    depth: Tensor  # (R,)
    opacity: Tensor  # (R,)
    semantics: Tensor | None = None  # (R,K)
    normal_mlp: Tensor | None = None  # (R,3)
    normal_density: Tensor | None = None  # (R,3)
    weights: np.ndarray | None = None  # (R,S), detached
    tvals: np.ndarray | None = None  # (R,S)


def sample_along_ray(near, far, n, rng=None, n_rays=None):
    """Stratified distances: one sample per bin of [near, far], increasing.

    With `rng` None the samples sit at bin midpoints. Shape (n,) or
    (n_rays, n) when `n_rays` is given.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    shape = (n,) if n_rays is None else (n_rays, n)
    u = np.full(shape, 0.5) if rng is None else rng.random(shape)
    i = np.arange(n, dtype=np.float64)
    return near + (i + u) * ((far - near) / n)


def composite(sigma: Tensor, tvals: np.ndarray, far: float, attrs: dict | None = None):
    """Front-to-back alpha compositing.

    sigma (R,S) Tensor; tvals (R,S) plain array (sample positions are not
    differentiated); attrs maps name -> Tensor (R,S,C). Returns a dict with
    'depth', 'opacity', 'weights' plus one (R,C) entry per attribute.
    """
    attrs = attrs or {}
    t = np.atleast_2d(tvals)
    R, S = t.shape
    delta = np.concatenate([t[:, 1:] - t[:, :-1], far - t[:, -1:]], axis=1)
    if np.any(delta < 0):
        raise ValueError("sample distances must be increasing")

    names = list(attrs)
    chans = [attrs[k].shape[-1] for k in names]
    offs = np.cumsum([0] + chans)
    a_data = np.concatenate([attrs[k].data for k in names], axis=-1) if names else np.zeros((R, S, 0))
    C = a_data.shape[-1]

    sig = sigma.data.reshape(R, S)
    a = sig * delta
    e = np.exp(-a)
    alpha = 1.0 - e
    w = np.empty((R, S))
    T = np.ones(R)
    for i in range(S):
        w[:, i] = T * alpha[:, i]
        T = T * e[:, i]

    out = np.empty((R, C + 2))
    for c in range(C):
        acc = np.zeros(R)
        for i in range(S):
            acc = acc + w[:, i] * a_data[:, i, c]
        out[:, c] = acc
    depth = np.zeros(R)
    opac = np.zeros(R)
    for i in range(S):
        depth = depth + w[:, i] * t[:, i]
        opac = opac + w[:, i]
    out[:, C] = depth
    out[:, C + 1] = opac

    parents = [sigma] + [attrs[k] for k in names]

    def bw(g):
        # q_i = dL/dw_i collected from every output channel
        q = np.zeros((R, S))
        for c in range(C):
            q += g[:, c : c + 1] * a_data[:, :, c]
        q += g[:, C : C + 1] * t
        q += g[:, C + 1 : C + 2]
        # per-sample T_i (recomputed forward)
        Tm = np.empty((R, S))
        run = np.ones(R)
        for i in range(S):
            Tm[:, i] = run
            run = run * e[:, i]
        qw = q * w
        suffix = np.zeros((R, S))
        acc = np.zeros(R)
        for i in range(S - 1, -1, -1):
            suffix[:, i] = acc
            acc = acc + qw[:, i]
        da = e * Tm * q - suffix
        sigma._accum((da * delta).reshape(sigma.data.shape))
        for k, c0, c1 in zip(names, offs[:-1], offs[1:]):
            attrs[k]._accum(w[:, :, None] * g[:, c0:c1][:, None, :])

    packed = Tensor._make(out, tuple(parents), bw)
    result = {"weights": w, "tvals": t}
    for k, c0, c1 in zip(names, offs[:-1], offs[1:]):
        result[k] = packed[:, c0:c1]
    result["depth"] = packed[:, C]
    result["opacity"] = packed[:, C + 1]
    return result


def render_rays(field, origins, dirs, settings: RenderSettings, rng=None,
                want_semantics=False, want_normal=False, want_density_normal=False,
                normal_fd_h=1e-3) -> RenderResult:
    """Volume-render a batch of rays through the field."""
    origins = np.atleast_2d(origins)
    dirs = np.atleast_2d(dirs)
    R = origins.shape[0]
    S = settings.n_samples
    t = sample_along_ray(settings.near, settings.far, S, rng, n_rays=R)
    pts = origins[:, None, :] + t[..., None] * dirs[:, None, :]
    flat = pts.reshape(-1, 3)
    drep = np.repeat(dirs, S, axis=0)

    q = field.point_quantities(flat, drep, want_semantics, want_normal,
                               want_density_normal, normal_fd_h)
    sigma = q["sigma"].reshape(R, S)
    attrs = {"rgb": q["rgb"].reshape(R, S, 3)}
    if want_semantics:
        attrs["sem"] = q["sem"].reshape(R, S, -1)
    if want_normal:
        attrs["n_mlp"] = q["n_mlp"].reshape(R, S, 3)
    if want_density_normal:
        attrs["n_dens"] = q["n_dens"].reshape(R, S, 3)

    comp = composite(sigma, t, settings.far, attrs)
    return RenderResult(
        color=comp["rgb"],
        depth=comp["depth"],
        opacity=comp["opacity"],
        semantics=comp.get("sem"),
        normal_mlp=comp.get("n_mlp"),
        normal_density=comp.get("n_dens"),
        weights=comp["weights"],
        tvals=comp["tvals"],
    )


def render_image(field, cam, settings: RenderSettings, want_semantics=False):
    """Full-frame volume render (no gradients kept). Returns dict of images."""
    from ..scene.camera import all_pixel_grid

    pixels = all_pixel_grid(cam.width, cam.height)
    dirs = cam.pixel_directions(pixels)
    origins = np.broadcast_to(cam.translation, dirs.shape)
    rgb = np.zeros((pixels.shape[0], 3))
    depth = np.zeros(pixels.shape[0])
    opac = np.zeros(pixels.shape[0])
    sem = None
    for a in range(0, pixels.shape[0], settings.chunk):
        b = min(a + settings.chunk, pixels.shape[0])
        res = render_rays(field, origins[a:b], dirs[a:b], settings,
                          want_semantics=want_semantics)
        rgb[a:b] = res.color.data
        depth[a:b] = res.depth.data
        opac[a:b] = res.opacity.data
        if want_semantics:
            if sem is None:
                sem = np.zeros((pixels.shape[0], res.semantics.data.shape[-1]))
            sem[a:b] = res.semantics.data
    shape = (cam.height, cam.width)
    out = {"rgb": rgb.reshape(*shape, 3), "depth": depth.reshape(shape),
           "opacity": opac.reshape(shape)}
    if sem is not None:
        out["semantics"] = sem.reshape(*shape, -1)
    return out
