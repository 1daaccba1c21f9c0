"""Neural texture and tiny view-dependent shader.

A texel holds six channels: base color B (first 3, kept in [0,1]) and an
unbounded specular feature S. A pixel's color is B plus the shader MLP run
on (S, view direction), clamped to [0,1] for display. The texture and
shader are fitted against training views with the geometry frozen; an
auxiliary hash-encoder network bootstraps them (surface point -> (B,S))
before the per-texel fit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from ..core import Adam, FeatureGrid, NanGradientError, Tensor, TinyMlp, concat
from ..core.contract import contract
from ..metrics import psnr
from .raster import pixel_view_dirs, rasterize_mesh

log = logging.getLogger(__name__)


def make_shader(rng=None, hidden=32) -> TinyMlp:
    """Two-layer MLP: (specular feature 3, view dir 3) -> RGB offset.

    No output activation: zero weights shade to exactly the base color.
    """
    return TinyMlp([6, hidden, 3], output_activation="none", rng=rng, name="shader")


class NeuralTexture:
    def __init__(self, resolution: int, rng=None, init_base=0.5):
        data = np.zeros((resolution, resolution, 6))
        data[..., :3] = init_base
        self.data = Tensor(data, requires_grad=True, name="texture")
        self.valid = np.zeros((resolution, resolution), dtype=bool)
        self.invalid_touches = 0

    @property
    def resolution(self):
        return self.data.shape[0]

    def clamp_base(self):
        self.data.data[..., :3] = np.clip(self.data.data[..., :3], 0.0, 1.0)

    def sample(self, uv: np.ndarray, count_invalid=False) -> Tensor:
        """Bilinear sample at (N,2) UVs, differentiable w.r.t. texel values.

        Texel (ix, iy) is centered at ((ix+0.5)/W, (iy+0.5)/H); edges clamp.
        The gradient scatter is accumulated in texel-index order.
        """
        H = W = self.resolution
        x = np.clip(uv[:, 0] * W - 0.5, 0.0, W - 1.0)
        y = np.clip(uv[:, 1] * H - 0.5, 0.0, H - 1.0)
        ix0 = np.minimum(np.floor(x).astype(np.int64), W - 2)
        iy0 = np.minimum(np.floor(y).astype(np.int64), H - 2)
        fx = (x - ix0)[:, None]
        fy = (y - iy0)[:, None]
        tex = self.data
        d = tex.data
        w00 = (1 - fx) * (1 - fy)
        w10 = fx * (1 - fy)
        w01 = (1 - fx) * fy
        w11 = fx * fy
        out = (w00 * d[iy0, ix0] + w10 * d[iy0, ix0 + 1]
               + w01 * d[iy0 + 1, ix0] + w11 * d[iy0 + 1, ix0 + 1])
        if count_invalid:
            touched = (~self.valid[iy0, ix0] | ~self.valid[iy0, ix0 + 1]
                       | ~self.valid[iy0 + 1, ix0] | ~self.valid[iy0 + 1, ix0 + 1])
            self.invalid_touches += int(touched.sum())

        def bw(g):
            buf = np.zeros_like(d)
            flat = buf.reshape(-1, 6)
            for iy, ix, w in ((iy0, ix0, w00), (iy0, ix0 + 1, w10),
                              (iy0 + 1, ix0, w01), (iy0 + 1, ix0 + 1, w11)):
                idx = iy * W + ix
                order = np.argsort(idx, kind="stable")
                np.add.at(flat, idx[order], (w * g)[order])
            tex._accum(buf)

        return Tensor._make(out, (tex,), bw)

    def dilate(self, radius: int | None = None):
        """Fill invalid texels from their nearest valid neighbour (atlas space)."""
        if self.valid.all() or not self.valid.any():
            return
        dist, (iy, ix) = ndimage.distance_transform_edt(~self.valid, return_indices=True)
        fill = ~self.valid if radius is None else (~self.valid) & (dist <= radius)
        self.data.data[fill] = self.data.data[iy[fill], ix[fill]]
        self.valid |= fill


def texel_surface_table(mesh, resolution: int):
    """Map atlas texels to surface points by rasterizing faces in UV space.

    Returns (valid (H,W) bool, points (H,W,3), face_id (H,W)).
    """
    from ..core import kernels

    if mesh.uvs is None:
        raise ValueError("mesh has no UVs")
    verts3 = np.concatenate([mesh.uvs * resolution, np.ones((mesh.n_vertices, 1))], axis=1)
    fid, bary, _ = kernels.rasterize(np.ascontiguousarray(verts3),
                                     np.ascontiguousarray(mesh.faces),
                                     1.0, 1.0, 0.0, 0.0, resolution, resolution)
    hit = fid >= 0
    pts = np.zeros((resolution, resolution, 3))
    if hit.any():
        corners = mesh.vertices[mesh.faces[fid[hit]]]
        pts[hit] = (corners * bary[hit][..., None]).sum(axis=1)
    return hit, pts, fid


def shade(gbuffer, texture: NeuralTexture, shader: TinyMlp, cam,
          background=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Deferred shading of a G-buffer: clamp(B + shader(S, d), 0, 1)."""
    H, W = gbuffer.face_id.shape
    img = np.empty((H, W, 3))
    img[:] = background
    hit = gbuffer.mask
    if not hit.any():
        return img
    uv = gbuffer.uv[hit]
    ts = texture.sample(uv, count_invalid=True).data
    dirs = pixel_view_dirs(cam, gbuffer.jitter)[hit]
    offset = shader(np.concatenate([ts[:, 3:], dirs], axis=1)).data
    img[hit] = np.clip(ts[:, :3] + offset, 0.0, 1.0)
    return img


def render_baked(mesh, texture, shader, cam, background=(1.0, 1.0, 1.0)):
    return shade(rasterize_mesh(mesh, cam), texture, shader, cam, background)


# -- stage 1: auxiliary-network initialization -----------------------------------


@dataclass
class BakeConfig:
    texture_resolution: int = 512
    init_steps: int = 800
    fit_steps: int = 800
    batch_pixels: int = 2048
    lr: float = 5e-3
    texel_lr: float = 5e-2
    aux_levels: int = 8
    aux_features: int = 2
    aux_log2: int = 14
    aux_hidden: int = 32
    shader_hidden: int = 32
    eval_every: int = 100
    depth_weight: float = 0.05
    jitter: float = 0.5  # optical-center perturbation, pixels


class AuxSurfaceNet:
    """Hash encoder + MLP mapping surface points to (B, S)."""

    def __init__(self, cfg: BakeConfig, seed=0):
        ss = np.random.SeedSequence([seed, 0xA0])
        r1, r2 = [np.random.default_rng(s) for s in ss.spawn(2)]
        self.grid = FeatureGrid(cfg.aux_levels, cfg.aux_features, cfg.aux_log2, rng=r1)
        self.mlp = TinyMlp([self.grid.output_dim, cfg.aux_hidden, 6], rng=r2, name="aux")

    def params(self):
        return self.grid.params() + self.mlp.params()

    def __call__(self, pts_world) -> tuple[Tensor, Tensor]:
        raw = self.mlp(self.grid.encode(contract(pts_world)))
        return raw[:, :3].sigmoid(), raw[:, 3:]


def _training_cameras(dataset, train_indices):
    return [(dataset.frames[i].camera, dataset.frames[i].image) for i in train_indices]


def init_texture(field, mesh, dataset, train_indices, cfg: BakeConfig, seed=0,
                 log_cb=None):
    """Two-stage initialization: fit (aux net + shader) on rendered color,
    then bake the aux net into the texels. Divergence (3 rising evals) falls
    back to plain field-color initialization."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA]))
    aux = AuxSurfaceNet(cfg, seed)
    shader = make_shader(np.random.default_rng(np.random.SeedSequence([seed, 0x5A])))
    cams = _training_cameras(dataset, train_indices)
    opt = Adam(aux.params() + shader.params(), lr=cfg.lr)

    diverging = 0
    best = np.inf
    ok = True
    for step in range(cfg.init_steps):
        cam, image = cams[int(rng.integers(len(cams)))]
        jit = rng.uniform(-cfg.jitter, cfg.jitter, size=2)
        gb = rasterize_mesh(mesh, cam, jit)
        hits = np.flatnonzero(gb.mask.reshape(-1))
        if hits.size == 0:
            continue
        pick = hits[rng.integers(0, hits.size, size=min(cfg.batch_pixels, hits.size))]
        iy, ix = np.unravel_index(pick, gb.mask.shape)
        pts = gb.position[iy, ix]
        dirs = pixel_view_dirs(cam, jit)[iy, ix]
        gt = image[iy, ix]
        base, spec = aux(pts)
        color = base + shader(concat([spec, Tensor(dirs)], axis=1))
        diff = color - gt
        loss = (diff * diff).sum(axis=-1).mean()
        opt.zero_grad()
        loss.backward()
        try:
            opt.step()
        except NanGradientError:
            ok = False
            break
        if (step + 1) % cfg.eval_every == 0:
            cur = float(loss.data)
            if log_cb:
                log_cb({"stage": "init", "step": step, "loss": cur})
            if cur > best:
                diverging += 1
                if diverging >= 3:
                    ok = False
                    break
            else:
                diverging = 0
                best = cur

    texture = NeuralTexture(cfg.texture_resolution)
    valid, pts, _ = texel_surface_table(mesh, cfg.texture_resolution)
    texture.valid = valid
    vp = pts[valid]
    if ok:
        chunk = 65536
        for a in range(0, len(vp), chunk):
            b, s = aux(vp[a : a + chunk])
            texture.data.data[valid.nonzero()[0][a : a + chunk],
                              valid.nonzero()[1][a : a + chunk], :3] = b.data
            texture.data.data[valid.nonzero()[0][a : a + chunk],
                              valid.nonzero()[1][a : a + chunk], 3:] = s.data
    else:
        log.warning("aux initialization diverged; falling back to field colors")
        shader = make_shader(np.random.default_rng(np.random.SeedSequence([seed, 0x5A])))
        for w in shader.weights:
            w.data[:] = 0.0
        mesh_normals = mesh.face_normals()
        _, _, fid = texel_surface_table(mesh, cfg.texture_resolution)
        n = mesh_normals[fid[valid]]
        q = field.point_quantities(vp, -n)
        texture.data.data[valid, :3] = q["rgb"].data
        texture.data.data[valid, 3:] = 0.0
    return texture, shader


# -- stage 2: direct texel + shader fit -------------------------------------------


def nerf_depth_maps(field, dataset, indices, settings):
    """Per-camera volume-rendered depth (the geometry target of the fit loss)."""
    from ..field.render import render_image

    out = {}
    for i in indices:
        cam = dataset.frames[i].camera
        out[i] = render_image(field, cam, settings)["depth"]
    return out


def fit_texture(mesh, texture: NeuralTexture, shader: TinyMlp, dataset, train_indices,
                cfg: BakeConfig, depth_maps=None, seed=0, log_cb=None):
    """Minimize color L2 (plus reported depth L1 vs the field) over training
    views with sub-pixel jitter; geometry stays fixed, so gradients reach only
    texels (through the bilinear weights) and the shader."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF1]))
    params = [texture.data] + shader.params()
    scales = [1.0] + [cfg.lr / cfg.texel_lr] * len(shader.params())
    opt = Adam(params, lr=cfg.texel_lr, lr_scales=scales)
    snapshot = (texture.data.data.copy(), [w.data.copy() for w in shader.params()])

    for step in range(cfg.fit_steps):
        fi = train_indices[int(rng.integers(len(train_indices)))]
        frame = dataset.frames[fi]
        jit = rng.uniform(-cfg.jitter, cfg.jitter, size=2)
        gb = rasterize_mesh(mesh, frame.camera, jit)
        hits = np.flatnonzero(gb.mask.reshape(-1))
        if hits.size == 0:
            continue
        pick = hits[rng.integers(0, hits.size, size=min(cfg.batch_pixels, hits.size))]
        iy, ix = np.unravel_index(pick, gb.mask.shape)
        ts = texture.sample(gb.uv[iy, ix])
        dirs = pixel_view_dirs(frame.camera, jit)[iy, ix]
        color = ts[:, :3] + shader(concat([ts[:, 3:], Tensor(dirs)], axis=1))
        diff = color - frame.image[iy, ix]
        loss = (diff * diff).sum(axis=-1).mean()
        depth_l1 = None
        if depth_maps is not None and fi in depth_maps:
            depth_l1 = float(np.abs(gb.depth[iy, ix] - depth_maps[fi][iy, ix]).mean())
        if not np.isfinite(loss.data):
            texture.data.data, shw = snapshot
            for w, val in zip(shader.params(), shw):
                w.data = val
            log.warning("fit_texture: non-finite loss at step %d; restored", step)
            break
        opt.zero_grad()
        loss.backward()
        try:
            opt.step()
        except NanGradientError:
            texture.data.data, shw = snapshot
            for w, val in zip(shader.params(), shw):
                w.data = val
            break
        texture.clamp_base()
        if (step + 1) % cfg.eval_every == 0:
            snapshot = (texture.data.data.copy(), [w.data.copy() for w in shader.params()])
            if log_cb:
                rec = {"stage": "fit", "step": step, "color_l2": float(loss.data)}
                if depth_l1 is not None:
                    rec["depth_l1"] = depth_l1
                log_cb(rec)
    return texture, shader


def baked_psnr(mesh, texture, shader, dataset, indices, background=(1, 1, 1)):
    vals = []
    for i in indices:
        fr = dataset.frames[i]
        img = render_baked(mesh, texture, shader, fr.camera, background)
        vals.append(psnr(img, fr.image))
    finite = [v for v in vals if np.isfinite(v)]
    return float(np.mean(finite)) if finite else float("inf")
