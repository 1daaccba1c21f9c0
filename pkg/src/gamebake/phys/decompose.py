"""Scene decomposition: voxel labeling, per-entity extraction, texture
inpainting, and physical-parameter assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..bake.marching import extract_mesh
from ..bake.mesh import TriangleMesh
from ..bake.texture import NeuralTexture, texel_surface_table
from ..core.contract import contract, uncontract

log = logging.getLogger(__name__)

BACKGROUND_LABEL = 0
OUTSIDE_LABEL = -1


@dataclass
class VoxelLabels:
    """Per-lattice-vertex entity labels over contract space [-1,1]^3."""

    labels: np.ndarray  # (R+1,R+1,R+1) int
    resolution: int
    names: dict  # label id -> entity label string

    def label_at_contract(self, y: np.ndarray) -> np.ndarray:
        idx = np.clip(np.round((y + 1.0) * 0.5 * self.resolution), 0, self.resolution).astype(int)
        return self.labels[idx[:, 0], idx[:, 1], idx[:, 2]]


def label_voxels(field, resolution: int, instances=None, semantic_to_entity=None,
                 bounds=None) -> VoxelLabels:
    """Assign entity labels to the extraction lattice.

    Instance AABBs win when given; otherwise labels come from the semantic
    argmax at the voxel sample point. Points outside `bounds` (inflated
    world hint) get OUTSIDE_LABEL and are excluded from every entity.
    """
    axis = np.linspace(-1.0, 1.0, resolution + 1)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    contract_pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    world = uncontract(contract_pts)
    labels = np.full(world.shape[0], BACKGROUND_LABEL, dtype=np.int32)
    names = {BACKGROUND_LABEL: "background"}
    if instances:
        for k, inst in enumerate(instances, start=1):
            names[k] = inst["label"]
            inside = inst["aabb"].contains(world)
            labels[inside] = k
    elif semantic_to_entity:
        sem = np.empty(world.shape[0], dtype=np.int64)
        chunk = 262144
        for a in range(0, world.shape[0], chunk):
            sem[a : a + chunk] = field.semantic_argmax(world[a : a + chunk])
        for k, (cls_id, name) in enumerate(sorted(semantic_to_entity.items()), start=1):
            names[k] = name
            labels[sem == cls_id] = k
    if bounds is not None:
        outside = ~bounds.contains(world)
        labels[outside] = OUTSIDE_LABEL
    shape = (resolution + 1,) * 3
    return VoxelLabels(labels.reshape(shape), resolution, names)


class _MaskedField:
    """Field view with density zeroed outside the target label region."""

    def __init__(self, base, voxel_labels: VoxelLabels, target: int):
        self.base = base
        self.vl = voxel_labels
        self.target = target

    def density_from_contract(self, y):
        sig = self.base.density_from_contract(y)
        keep = (self.vl.label_at_contract(np.atleast_2d(y)) == self.target).astype(np.float64)
        from ..core import Tensor

        return sig * keep if isinstance(sig, Tensor) else sig * keep


def extract_entity(field, voxel_labels: VoxelLabels, target: int, resolution=None,
                   threshold=25.0) -> TriangleMesh:
    """Marching cubes with the density masked to one entity's voxels.

    The isosurface closes the mesh along label interfaces, so contact
    regions between entities come out watertight.
    """
    if not (voxel_labels.labels == target).any():
        raise ValueError(f"label {target} has no voxels")
    res = resolution or voxel_labels.resolution
    masked = _MaskedField(field, voxel_labels, target)
    return extract_mesh(masked, resolution=res, threshold=threshold)


def inpaint_entity_texture(entity_mesh: TriangleMesh, entity_res: int,
                           source_mesh: TriangleMesh, source_texture: NeuralTexture,
                           copy_radius: float) -> NeuralTexture:
    """Fill an entity's atlas from the whole-scene texture.

    Texels whose surface point sits on the original surface copy the nearest
    source texel (by 3D position); newly exposed texels (label interfaces)
    take their nearest valid atlas neighbour. No invalid texels remain.
    """
    src_valid, src_pts, _ = texel_surface_table(source_mesh, source_texture.resolution)
    iy, ix = np.nonzero(src_valid)
    tree = cKDTree(src_pts[src_valid])
    src_vals = source_texture.data.data[src_valid]

    out = NeuralTexture(entity_res)
    valid, pts, _ = texel_surface_table(entity_mesh, entity_res)
    if valid.any():
        d, nn = tree.query(pts[valid])
        near = d <= copy_radius
        ty, tx = np.nonzero(valid)
        out.data.data[ty[near], tx[near]] = src_vals[nn[near]]
        out.valid[ty[near], tx[near]] = True
        uncovered = int((~near).sum())
        if uncovered:
            log.info("inpainting %d newly exposed texels from atlas neighbours", uncovered)
    before = out.valid.copy()
    out.dilate()  # nearest-valid fill over the remaining texels
    out.valid |= valid | before
    out.valid[:] = True
    return out


@dataclass
class ParamTable:
    """Label -> physical parameter ranges; midpoints are assigned."""

    entries: dict = field(default_factory=dict)
    # entries[label] = {"mass": [lo,hi], "friction": [lo,hi], "restitution": [lo,hi],
    #                   "static": bool}

    def validate(self):
        for label, spec in self.entries.items():
            for key in ("mass", "friction", "restitution"):
                if key in spec:
                    lo, hi = spec[key]
                    if key == "mass" and (lo < 0 or hi < 0):
                        raise ValueError(f"{label}: negative mass range")
                    if lo > hi:
                        raise ValueError(f"{label}: inverted {key} range")
        return self


DEFAULT_PARAMS = {"mass": 0.0, "friction": 0.5, "restitution": 0.2, "static": True}


def assign_params(label: str, table: ParamTable, override: dict | None = None) -> dict:
    """Physical parameters for an entity: table midpoint, defaults when the
    label is absent, explicit override always winning."""
    table.validate()
    out = dict(DEFAULT_PARAMS)
    spec = table.entries.get(label)
    if spec is not None:
        out["static"] = bool(spec.get("static", False))
        for key in ("mass", "friction", "restitution"):
            if key in spec:
                lo, hi = spec[key]
                out[key] = 0.5 * (lo + hi)
        if out["static"]:
            out["mass"] = 0.0
    if override:
        out.update(override)
    if out["mass"] < 0:
        raise ValueError("negative mass")
    return out
