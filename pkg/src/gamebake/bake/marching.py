"""Isosurface extraction from the density field.

The [-1,1]^3 contract cube is sampled on one global lattice, partitioned
into 3x3x3 regions that are marched independently (classic marching cubes)
and share lattice planes, so stitched region boundaries are crack-free by
construction. Extracted vertices are mapped back to world space through the
inverse contraction.
"""

from __future__ import annotations

import logging

import numpy as np
from skimage import measure

from ..core.contract import uncontract
from .mesh import TriangleMesh, weld_vertices

log = logging.getLogger(__name__)

DEFAULT_DENSITY_THRESHOLD = 25.0


def sample_density_lattice(field, resolution: int, bound: float = 1.0, chunk: int = 262144):
    """Density on a (R+1)^3 lattice over [-bound, bound]^3 contract space."""
    axis = np.linspace(-bound, bound, resolution + 1)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    vals = np.empty(pts.shape[0])
    for a in range(0, pts.shape[0], chunk):
        b = min(a + chunk, pts.shape[0])
        vals[a:b] = field.density_from_contract(pts[a:b]).data
    return vals.reshape(resolution + 1, resolution + 1, resolution + 1), axis


def _region_slices(n_samples: int, parts: int):
    """Sample-index ranges per region, sharing one plane with the neighbour."""
    cuts = np.linspace(0, n_samples - 1, parts + 1).round().astype(int)
    return [(int(cuts[i]), int(cuts[i + 1])) for i in range(parts)]


def extract_mesh(field, resolution: int = 128, threshold: float = DEFAULT_DENSITY_THRESHOLD,
                 regions: int = 3, bound: float = 1.0) -> TriangleMesh:
    """Chunked marching cubes over contract space; vertices in world units."""
    volume, axis = sample_density_lattice(field, resolution, bound)
    spacing = axis[1] - axis[0]
    ranges = _region_slices(resolution + 1, regions)
    verts_out, faces_out = [], []
    base = 0
    for ix0, ix1 in ranges:
        for iy0, iy1 in ranges:
            for iz0, iz1 in ranges:
                sub = volume[ix0 : ix1 + 1, iy0 : iy1 + 1, iz0 : iz1 + 1]
                if sub.min() > threshold or sub.max() < threshold:
                    continue
                v, f, _, _ = measure.marching_cubes(sub, threshold,
                                                    spacing=(spacing, spacing, spacing),
                                                    method="lorensen")
                if len(v) == 0:
                    continue
                origin = np.array([axis[ix0], axis[iy0], axis[iz0]])
                verts_out.append(v + origin)
                faces_out.append(np.asarray(f, dtype=np.int64) + base)
                base += len(v)
    if not verts_out:
        log.warning("extract_mesh: isosurface empty at threshold %.3g", threshold)
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int64))
    contract_mesh = TriangleMesh(np.concatenate(verts_out), np.concatenate(faces_out))
    # region-boundary duplicates coincide exactly (same lattice, same lerp)
    contract_mesh = weld_vertices(contract_mesh, eps=spacing * 1e-6)
    world_verts = uncontract(contract_mesh.vertices)
    return TriangleMesh(world_verts, contract_mesh.faces)
