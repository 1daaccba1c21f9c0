"""Scene dataset: posed images plus optional monocular cue maps.

On disk a scene is a directory with ``scene.json`` plus PNGs:
images 8-bit RGB; depth cues 16-bit grayscale with the metric scale in a
``scale`` text chunk of the PNG header (0 = invalid pixel); normal cues RGB
mapped [-1,1] -> [0,255] (camera frame); semantics 8-bit palette ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin

from ..geometry import AxisAlignedBox, normalized
from .camera import CameraModel

SCENE_SCHEMA_VERSION = 1


class SceneValidationError(ValueError):
    pass


@dataclass
class FrameRecord:
    camera: CameraModel
    image: np.ndarray  # (H,W,3) float in [0,1]
    depth: np.ndarray | None = None  # (H,W) world units, 0 where invalid
    normal: np.ndarray | None = None  # (H,W,3) unit vectors, camera frame
    semantic: np.ndarray | None = None  # (H,W) class ids
    name: str = "frame"

    def __post_init__(self):
        h, w = self.image.shape[:2]
        if (w, h) != (self.camera.width, self.camera.height):
            raise SceneValidationError(f"{self.name}: image size {w}x{h} != camera")
        for label, cue in (("depth", self.depth), ("normal", self.normal), ("semantic", self.semantic)):
            if cue is not None and cue.shape[:2] != (h, w):
                raise SceneValidationError(f"{self.name}: {label} map resolution mismatch")

    @property
    def has_depth(self):
        return self.depth is not None

    @property
    def has_normal(self):
        return self.normal is not None

    @property
    def has_semantic(self):
        return self.semantic is not None

    def normal_world(self) -> np.ndarray | None:
        """Normal cue rotated from camera to world frame."""
        if self.normal is None:
            return None
        return self.normal @ self.camera.rotation.T


@dataclass
class SceneDataset:
    frames: list[FrameRecord]
    classes: dict[int, str] = field(default_factory=dict)
    world_bounds: AxisAlignedBox | None = None
    instances: list[dict] = field(default_factory=list)  # {label, aabb: AxisAlignedBox}

    def __post_init__(self):
        if not self.frames:
            raise SceneValidationError("dataset needs at least one frame")
        ids = sorted(self.classes)
        if ids and ids != list(range(len(ids))):
            raise SceneValidationError("class ids must be dense from 0")

    @property
    def cameras(self):
        return [f.camera for f in self.frames]

    def diameter(self) -> float:
        if self.world_bounds is not None:
            return self.world_bounds.diagonal
        pts = np.stack([c.translation for c in self.cameras])
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


# -- png helpers -------------------------------------------------------------


def _write_png(path, array_u8, pnginfo=None):
    Image.fromarray(array_u8).save(path, format="PNG", pnginfo=pnginfo)


def _load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def _save_depth(path, depth: np.ndarray):
    finite = depth[np.isfinite(depth) & (depth > 0)]
    scale = float(finite.max()) if finite.size else 1.0
    q = np.zeros(depth.shape, dtype=np.uint16)
    valid = np.isfinite(depth) & (depth > 0)
    q[valid] = np.clip(np.round(depth[valid] / scale * 65535.0), 1, 65535).astype(np.uint16)
    info = PngImagePlugin.PngInfo()
    info.add_text("scale", repr(scale))
    Image.fromarray(q).save(path, format="PNG", pnginfo=info)


def _load_depth(path) -> np.ndarray:
    with Image.open(path) as im:
        scale = float(im.text["scale"])
        q = np.asarray(im, dtype=np.float64)
    return q / 65535.0 * scale


def _save_normal(path, normal: np.ndarray):
    b = np.clip(np.round((normal + 1.0) * 0.5 * 255.0), 0, 255).astype(np.uint8)
    _write_png(path, b)


def _load_normal(path) -> np.ndarray:
    with Image.open(path) as im:
        b = np.asarray(im.convert("RGB"), dtype=np.float64)
    n = b / 255.0 * 2.0 - 1.0
    norms = np.linalg.norm(n, axis=-1)
    valid = norms > 0.5
    out = np.zeros_like(n)
    out[valid] = n[valid] / norms[valid][..., None]
    return out


def _save_semantic(path, sem: np.ndarray):
    _write_png(path, sem.astype(np.uint8))


def _load_semantic(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.int64)


# -- manifest ------------------------------------------------------------------


def save_scene(dataset: SceneDataset, out_dir) -> Path:
    """Write scene.json plus per-frame PNGs; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames_json = []
    for i, fr in enumerate(dataset.frames):
        stem = f"{i:04d}"
        entry = {"image": f"{stem}_rgb.png"}
        _write_png(out / entry["image"], np.clip(np.round(fr.image * 255.0), 0, 255).astype(np.uint8))
        if fr.has_depth:
            entry["depth"] = f"{stem}_depth.png"
            _save_depth(out / entry["depth"], fr.depth)
        if fr.has_normal:
            entry["normal"] = f"{stem}_normal.png"
            _save_normal(out / entry["normal"], fr.normal)
        if fr.has_semantic:
            entry["semantic"] = f"{stem}_sem.png"
            _save_semantic(out / entry["semantic"], fr.semantic)
        cam = fr.camera
        entry["intrinsics"] = {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                               "w": cam.width, "h": cam.height}
        entry["pose"] = [float(x) for x in cam.pose_matrix.reshape(-1)]
        frames_json.append(entry)
    doc = {
        "version": SCENE_SCHEMA_VERSION,
        "frames": frames_json,
        "classes": [{"id": i, "name": n} for i, n in sorted(dataset.classes.items())],
    }
    if dataset.instances:
        doc["instances"] = [
            {"label": inst["label"], "aabb": inst["aabb"].as_list()} for inst in dataset.instances
        ]
    path = out / "scene.json"
    path.write_text(json.dumps(doc, indent=1))
    return path


def load_scene(manifest_path) -> SceneDataset:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise SceneValidationError(f"manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    if doc.get("version") != SCENE_SCHEMA_VERSION:
        raise SceneValidationError(f"unsupported scene version {doc.get('version')}")
    root = manifest_path.parent
    frames = []
    for i, entry in enumerate(doc["frames"]):
        img_path = root / entry["image"]
        if not img_path.exists():
            raise SceneValidationError(f"frame {i}: missing image file {img_path}")
        intr = entry["intrinsics"]
        cam = CameraModel.from_pose_matrix(
            intr["fx"], intr["fy"], intr["cx"], intr["cy"], intr["w"], intr["h"], entry["pose"]
        )
        image = _load_image(img_path)

        def _cue(key, loader):
            if key not in entry:
                return None
            p = root / entry[key]
            return loader(p) if p.exists() else None

        try:
            frame = FrameRecord(
                camera=cam,
                image=image,
                depth=_cue("depth", _load_depth),
                normal=_cue("normal", _load_normal),
                semantic=_cue("semantic", _load_semantic),
                name=f"frame{i}",
            )
        except SceneValidationError as exc:
            raise SceneValidationError(str(exc)) from None
        frames.append(frame)
    classes = {c["id"]: c["name"] for c in doc.get("classes", [])}
    instances = [
        {"label": inst["label"], "aabb": AxisAlignedBox(inst["aabb"][:3], inst["aabb"][3:])}
        for inst in doc.get("instances", [])
    ]
    bounds = None
    if frames:
        centers = np.stack([f.camera.translation for f in frames])
        bounds = AxisAlignedBox(centers.min(axis=0), centers.max(axis=0))
    return SceneDataset(frames=frames, classes=classes, world_bounds=bounds, instances=instances)
