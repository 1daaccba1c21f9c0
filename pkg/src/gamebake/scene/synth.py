"""Analytic synthetic scene: the verification oracle for the whole pipeline.

A textured ground plane plus spheres/boxes with diffuse albedo, ray-traced
exactly. Renders carry exact depth, normal and semantic maps, and the
primitive list is kept so later stages (mesh extraction, decomposition,
physics) can be checked against closed-form geometry.

Semantic ids: 0 sky, 1 sphere, 2 ground, 3 box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import AxisAlignedBox, normalized
from .camera import CameraModel, all_pixel_grid
from .dataset import FrameRecord, SceneDataset

SKY, SPHERE_CLS, GROUND_CLS, BOX_CLS = 0, 1, 2, 3
CLASS_NAMES = {SKY: "sky", SPHERE_CLS: "sphere", GROUND_CLS: "ground", BOX_CLS: "box"}


@dataclass
class SpherePrim:
    center: np.ndarray
    radius: float
    label: str = "ball"

    def aabb(self):
        c, r = np.asarray(self.center), self.radius
        return AxisAlignedBox(c - r, c + r)


@dataclass
class BoxPrim:
    center: np.ndarray
    half: np.ndarray
    label: str = "crate"

    def aabb(self):
        c, h = np.asarray(self.center), np.asarray(self.half)
        return AxisAlignedBox(c - h, c + h)


@dataclass
class SynthGeometry:
    ground_half: float = 0.7
    spheres: list[SpherePrim] = field(default_factory=list)
    boxes: list[BoxPrim] = field(default_factory=list)
    sky_color: np.ndarray = field(default_factory=lambda: np.array([0.55, 0.70, 0.88]))
    light_dir: np.ndarray = field(default_factory=lambda: normalized([0.35, 0.25, 0.9]))
    ambient: float = 0.35
    checker_size: float = 0.14

    def bounds(self) -> AxisAlignedBox:
        lo = np.array([-self.ground_half, -self.ground_half, 0.0])
        hi = np.array([self.ground_half, self.ground_half, 0.0])
        for s in self.spheres:
            lo = np.minimum(lo, s.aabb().lo)
            hi = np.maximum(hi, s.aabb().hi)
        for b in self.boxes:
            lo = np.minimum(lo, b.aabb().lo)
            hi = np.maximum(hi, b.aabb().hi)
        return AxisAlignedBox(lo, hi)

    def instances(self):
        out = []
        for s in self.spheres:
            out.append({"label": s.label, "aabb": s.aabb()})
        for b in self.boxes:
            out.append({"label": b.label, "aabb": b.aabb()})
        return out

    # -- exact intersection ------------------------------------------------

    def raycast(self, origins, dirs):
        """Nearest hit for rays (N,3),(N,3) -> (t, normal, class_id, albedo).

        t = +inf where the ray escapes to the sky.
        """
        origins = np.atleast_2d(origins)
        dirs = np.atleast_2d(dirs)
        n = origins.shape[0]
        best_t = np.full(n, np.inf)
        normal = np.zeros((n, 3))
        cls = np.full(n, SKY, dtype=np.int64)
        albedo = np.zeros((n, 3))

        def consider(t, mask, nrm, cid, alb):
            win = mask & (t < best_t) & (t > 1e-9)
            best_t[win] = t[win]
            normal[win] = nrm[win] if nrm.ndim == 2 else nrm
            cls[win] = cid
            albedo[win] = alb[win] if alb.ndim == 2 else alb

        # ground plane z = 0, |x|,|y| <= half
        with np.errstate(divide="ignore", invalid="ignore"):
            tp = -origins[:, 2] / dirs[:, 2]
        hit_xy = origins[:, :2] + tp[:, None] * dirs[:, :2]
        on_plate = (np.abs(dirs[:, 2]) > 1e-12) & (tp > 0) & (np.abs(hit_xy) <= self.ground_half).all(axis=1)
        cells = np.floor(hit_xy / self.checker_size).astype(np.int64).sum(axis=1) % 2
        pa = np.where(cells[:, None] == 0, [[0.72, 0.62, 0.50]], [[0.33, 0.38, 0.45]])
        consider(tp, on_plate, np.array([0.0, 0.0, 1.0]), GROUND_CLS, pa)

        for s in self.spheres:
            oc = origins - np.asarray(s.center)
            b = (oc * dirs).sum(axis=1)
            c = (oc * oc).sum(axis=1) - s.radius**2
            disc = b * b - c
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            t0 = -b - sq
            t1 = -b + sq
            ts = np.where(t0 > 1e-9, t0, t1)
            hit = ok & (ts > 1e-9)
            pt = origins + ts[:, None] * dirs
            nrm = normalized(pt - np.asarray(s.center))
            bands = (np.floor((nrm[:, 2] + 1.0) * 3.0).astype(np.int64)) % 2
            alb = np.where(bands[:, None] == 0, [[0.75, 0.22, 0.18]], [[0.85, 0.78, 0.70]])
            consider(ts, hit, nrm, SPHERE_CLS, alb)

        for bx in self.boxes:
            lo = np.asarray(bx.center) - np.asarray(bx.half)
            hi = np.asarray(bx.center) + np.asarray(bx.half)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / dirs
            t_lo = (lo - origins) * inv
            t_hi = (hi - origins) * inv
            t_near = np.minimum(t_lo, t_hi).max(axis=1)
            t_far = np.maximum(t_lo, t_hi).min(axis=1)
            hit = (t_near <= t_far) & (t_far > 1e-9)
            ts = np.where(t_near > 1e-9, t_near, t_far)
            pt = origins + ts[:, None] * dirs
            rel = (pt - np.asarray(bx.center)) / np.asarray(bx.half)
            axis = np.abs(rel).argmax(axis=1)
            nrm = np.zeros((origins.shape[0], 3))
            nrm[np.arange(origins.shape[0]), axis] = np.sign(rel[np.arange(origins.shape[0]), axis])
            tone = np.choose(axis, [0.85, 1.0, 1.15])
            alb = np.clip(np.array([[0.20, 0.45, 0.68]]) * tone[:, None], 0.0, 1.0)
            consider(ts, hit, nrm, BOX_CLS, alb)

        return best_t, normal, cls, albedo

    def shade(self, t, normal, cls, albedo):
        """Diffuse shading; sky pixels get the sky color."""
        lam = np.clip((normal * self.light_dir).sum(axis=-1), 0.0, None)
        col = albedo * (self.ambient + (1.0 - self.ambient) * lam)[:, None]
        col[cls == SKY] = self.sky_color
        return np.clip(col, 0.0, 1.0)

    def to_json(self):
        return {
            "ground_half": self.ground_half,
            "checker_size": self.checker_size,
            "ambient": self.ambient,
            "sky_color": self.sky_color.tolist(),
            "light_dir": self.light_dir.tolist(),
            "spheres": [
                {"center": list(map(float, s.center)), "radius": s.radius, "label": s.label}
                for s in self.spheres
            ],
            "boxes": [
                {"center": list(map(float, b.center)), "half": list(map(float, b.half)), "label": b.label}
                for b in self.boxes
            ],
        }

    @classmethod
    def from_json(cls, doc):
        return cls(
            ground_half=doc["ground_half"],
            checker_size=doc["checker_size"],
            ambient=doc["ambient"],
            sky_color=np.array(doc["sky_color"]),
            light_dir=np.array(doc["light_dir"]),
            spheres=[SpherePrim(np.array(s["center"]), s["radius"], s["label"]) for s in doc["spheres"]],
            boxes=[BoxPrim(np.array(b["center"]), np.array(b["half"]), b["label"]) for b in doc["boxes"]],
        )


def default_geometry() -> SynthGeometry:
    return SynthGeometry(
        spheres=[SpherePrim(np.array([-0.28, 0.05, 0.27]), 0.30)],
        boxes=[BoxPrim(np.array([0.33, -0.10, 0.14]), np.array([0.16, 0.13, 0.15]))],
    )


@dataclass
class SynthConfig:
    width: int = 128
    height: int = 128
    n_views: int = 72
    orbit_radius: float = 2.0
    orbit_height: float = 1.15
    target: tuple = (0.0, 0.0, 0.12)
    fov_deg: float = 52.0
    supersample: int = 2  # color AA; cue maps stay at pixel centers


def orbit_cameras(cfg: SynthConfig) -> list[CameraModel]:
    focal = 0.5 * cfg.width / np.tan(np.deg2rad(cfg.fov_deg) / 2.0)
    cams = []
    for k in range(cfg.n_views):
        ang = 2.0 * np.pi * k / cfg.n_views
        eye = np.array([cfg.orbit_radius * np.cos(ang), cfg.orbit_radius * np.sin(ang), cfg.orbit_height])
        cams.append(
            CameraModel.look_at(
                eye, np.array(cfg.target), np.array([0.0, 0.0, 1.0]),
                focal, focal, cfg.width / 2.0, cfg.height / 2.0, cfg.width, cfg.height,
            )
        )
    return cams


def render_frame(geom: SynthGeometry, cam: CameraModel, supersample=2) -> FrameRecord:
    pixels = all_pixel_grid(cam.width, cam.height)
    origins = np.broadcast_to(cam.translation, (pixels.shape[0], 3))

    # color, optionally supersampled
    if supersample > 1:
        acc = np.zeros((pixels.shape[0], 3))
        for iy in range(supersample):
            for ix in range(supersample):
                j = np.array([(ix + 0.5) / supersample - 0.5, (iy + 0.5) / supersample - 0.5])
                dirs = cam.pixel_directions(pixels, j)
                acc += geom.shade(*geom.raycast(origins, dirs))
        color = acc / supersample**2
    else:
        dirs = cam.pixel_directions(pixels)
        color = geom.shade(*geom.raycast(origins, dirs))

    dirs = cam.pixel_directions(pixels)
    t, normal, cls, _ = geom.raycast(origins, dirs)
    hit = np.isfinite(t)
    depth = np.where(hit, t, 0.0)
    normal_cam = normal @ cam.rotation  # world -> camera frame
    normal_cam[~hit] = 0.0

    shape = (cam.height, cam.width)
    return FrameRecord(
        camera=cam,
        image=color.reshape(*shape, 3),
        depth=depth.reshape(shape),
        normal=normal_cam.reshape(*shape, 3),
        semantic=cls.reshape(shape),
    )


def synth_scene(cfg: SynthConfig | None = None, geom: SynthGeometry | None = None,
                seed: int = 0) -> SceneDataset:
    cfg = cfg or SynthConfig()
    geom = geom or default_geometry()
    frames = [render_frame(geom, cam, cfg.supersample) for cam in orbit_cameras(cfg)]
    ds = SceneDataset(
        frames=frames,
        classes=dict(CLASS_NAMES),
        world_bounds=geom.bounds(),
        instances=geom.instances(),
    )
    ds.geometry = geom  # exact primitives, kept for oracle checks
    return ds


def save_geometry(geom: SynthGeometry, scene_dir) -> None:
    Path(scene_dir, "geometry.json").write_text(json.dumps(geom.to_json(), indent=1))


def load_geometry(scene_dir) -> SynthGeometry:
    return SynthGeometry.from_json(json.loads(Path(scene_dir, "geometry.json").read_text()))
