"""UV atlas generation.

Charts grow greedily over the face-adjacency graph while face normals stay
within a cone of the seed normal. Each chart is flattened by least-squares
conformal mapping (orthographic projection as fallback), checked for texel
overlap in its own raster, split if it self-overlaps, and finally shelf-
packed into [0,1]^2 with a gutter. Vertices are duplicated per chart, so
every face has exactly one chart and per-vertex UVs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .mesh import TriangleMesh

log = logging.getLogger(__name__)


@dataclass
class UnwrapConfig:
    normal_cone_deg: float = 60.0
    max_chart_faces: int = 400
    atlas_resolution: int = 512
    max_atlas_resolution: int = 4096
    gutter_texels: int = 2
    occupancy: float = 0.5  # target fraction of atlas area covered by charts


@dataclass
class Chart:
    faces: np.ndarray  # face indices into the source mesh
    uv: np.ndarray | None = None  # (n_local_verts, 2) chart-local, pre-pack
    verts: np.ndarray | None = None  # source vertex ids, aligned with uv rows


def _face_adjacency(faces):
    edge_owner = {}
    adj = [[] for _ in range(len(faces))]
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key in edge_owner:
                other = edge_owner[key]
                adj[fi].append(other)
                adj[other].append(fi)
            else:
                edge_owner[key] = fi
    return adj


def grow_charts(mesh: TriangleMesh, cfg: UnwrapConfig) -> list[np.ndarray]:
    """Greedy BFS chart growth by normal similarity; deterministic order."""
    normals = mesh.face_normals()
    adj = _face_adjacency(mesh.faces)
    cos_thresh = np.cos(np.deg2rad(cfg.normal_cone_deg))
    assigned = np.full(mesh.n_faces, -1, dtype=np.int64)
    charts = []
    for seed in range(mesh.n_faces):
        if assigned[seed] >= 0:
            continue
        cid = len(charts)
        members = [seed]
        assigned[seed] = cid
        queue = [seed]
        ref = normals[seed]
        while queue and len(members) < cfg.max_chart_faces:
            cur = queue.pop(0)
            for nb in sorted(adj[cur]):
                if assigned[nb] >= 0 or len(members) >= cfg.max_chart_faces:
                    continue
                if normals[nb] @ ref >= cos_thresh:
                    assigned[nb] = cid
                    members.append(nb)
                    queue.append(nb)
        charts.append(np.array(members, dtype=np.int64))
    return charts


def _chart_basis(mesh, face_ids):
    n = mesh.face_normals()[face_ids]
    a = mesh.face_areas()[face_ids][:, None]
    avg = (n * a).sum(axis=0)
    norm = np.linalg.norm(avg)
    avg = avg / norm if norm > 1e-12 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(avg[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(avg, helper)
    u /= np.linalg.norm(u)
    v = np.cross(avg, u)
    return u, v


def _project_chart(mesh, face_ids):
    """Orthographic flattening onto the area-weighted average plane."""
    verts = np.unique(mesh.faces[face_ids])
    u, v = _chart_basis(mesh, face_ids)
    p = mesh.vertices[verts]
    uv = np.stack([p @ u, p @ v], axis=1)
    return verts, uv


def _lscm_chart(mesh, face_ids):
    """Least-squares conformal map with the two most distant verts pinned."""
    verts = np.unique(mesh.faces[face_ids])
    if len(verts) < 3:
        return _project_chart(mesh, face_ids)
    local = {v: i for i, v in enumerate(verts)}
    nv = len(verts)
    p = mesh.vertices[verts]
    # pin the two extremes of the largest-extent axis
    spread = p.max(axis=0) - p.min(axis=0)
    ax = int(spread.argmax())
    pin = [int(p[:, ax].argmin()), int(p[:, ax].argmax())]
    if pin[0] == pin[1]:
        return _project_chart(mesh, face_ids)

    rows, cols, vals = [], [], []
    brow = []
    r = 0
    for fi in face_ids:
        tri = [local[t] for t in mesh.faces[fi]]
        q = mesh.vertices[mesh.faces[fi]]
        e1 = q[1] - q[0]
        e2 = q[2] - q[0]
        nrm = np.cross(e1, e2)
        area2 = np.linalg.norm(nrm)
        if area2 < 1e-16:
            continue
        x1 = np.linalg.norm(e1)
        xb = e1 / max(x1, 1e-20)
        yb = np.cross(nrm / area2, xb)
        x2, y2 = e2 @ xb, e2 @ yb
        # conformality residual per face, real and imaginary rows
        w = [complex(x2 - x1, -y2), complex(-x2, y2), complex(x1, 0.0)]
        scale = 1.0 / np.sqrt(area2)
        for k, vert in enumerate(tri):
            wr, wi = w[k].real * scale, w[k].imag * scale
            # unknown layout: [u_0..u_nv-1, v_0..v_nv-1]
            rows += [r, r, r + 1, r + 1]
            cols += [vert, nv + vert, vert, nv + vert]
            vals += [wr, -wi, wi, wr]
        r += 2
    if r == 0:
        return _project_chart(mesh, face_ids)
    A = coo_matrix((vals, (rows, cols)), shape=(r, 2 * nv)).tocsc()
    fixed_idx = np.array([pin[0], nv + pin[0], pin[1], nv + pin[1]])
    fixed_val = np.array([0.0, 0.0, 1.0, 0.0])
    free = np.setdiff1d(np.arange(2 * nv), fixed_idx)
    Af = A[:, free]
    b = -A[:, fixed_idx] @ fixed_val
    try:
        sol = spsolve((Af.T @ Af).tocsc(), Af.T @ b)
    except Exception:
        return _project_chart(mesh, face_ids)
    full = np.zeros(2 * nv)
    full[fixed_idx] = fixed_val
    full[free] = sol
    uv = np.stack([full[:nv], full[nv:]], axis=1)
    if not np.all(np.isfinite(uv)):
        return _project_chart(mesh, face_ids)
    # reject folded results: any inverted face falls back to projection
    tri_uv = uv[np.vectorize(local.get)(mesh.faces[face_ids])]
    e1 = tri_uv[:, 1] - tri_uv[:, 0]
    e2 = tri_uv[:, 2] - tri_uv[:, 0]
    signed = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if (signed > 0).any() and (signed < 0).any():
        return _project_chart(mesh, face_ids)
    return verts, uv


def _chart_overlaps(face_ids, verts, uv, mesh, res=64):
    """Rasterize the chart into its own grid; True if two faces contest a texel."""
    from ..core import kernels

    local = {v: i for i, v in enumerate(verts)}
    span = uv.max(axis=0) - uv.min(axis=0)
    span[span < 1e-12] = 1e-12
    norm_uv = (uv - uv.min(axis=0)) / span  # [0,1]^2
    verts3 = np.concatenate([norm_uv * res, np.ones((len(uv), 1))], axis=1)
    faces_local = np.vectorize(local.get)(mesh.faces[face_ids]).astype(np.int64)
    owner = np.full((res, res), -1, dtype=np.int32)
    for fi in range(len(faces_local)):
        fid, _, _ = kernels.rasterize(np.ascontiguousarray(verts3),
                                      np.ascontiguousarray(faces_local[fi : fi + 1]),
                                      1.0, 1.0, 0.0, 0.0, res, res)
        hit = fid >= 0
        if (owner[hit] >= 0).any():
            return True
        owner[hit] = fi
    return False


def _split_chart(mesh, face_ids):
    """Partition a chart into two by growing from its two most distant faces."""
    cent = mesh.face_centroids()[face_ids]
    d = np.linalg.norm(cent[:, None, :] - cent[None, :, :], axis=-1)
    i, j = np.unravel_index(int(d.argmax()), d.shape)
    da = np.linalg.norm(cent - cent[i], axis=1)
    db = np.linalg.norm(cent - cent[j], axis=1)
    first = da <= db
    return face_ids[first], face_ids[~first]


def flatten_charts(mesh: TriangleMesh, chart_faces: list[np.ndarray], cfg: UnwrapConfig):
    """Flatten each chart; recursively split charts whose projection overlaps."""
    out: list[Chart] = []
    stack = list(chart_faces)
    while stack:
        face_ids = stack.pop(0)
        if len(face_ids) == 0:
            continue
        verts, uv = _lscm_chart(mesh, face_ids)
        if len(face_ids) > 1 and _chart_overlaps(face_ids, verts, uv, mesh):
            a, b = _split_chart(mesh, face_ids)
            if len(a) and len(b):
                stack += [a, b]
                continue
        out.append(Chart(faces=face_ids, uv=uv, verts=verts))
    return out


def pack_charts(mesh: TriangleMesh, charts: list[Chart], cfg: UnwrapConfig):
    """Shelf-pack charts at uniform texel density; grows the atlas on overflow."""
    total_area = sum(
        float(TriangleMesh(mesh.vertices, mesh.faces[c.faces]).face_areas().sum()) for c in charts
    )
    res = cfg.atlas_resolution
    while True:
        density = np.sqrt(cfg.occupancy * res * res / max(total_area, 1e-12))
        placements = _try_pack(charts, density, res, cfg.gutter_texels)
        if placements is not None:
            break
        if res >= cfg.max_atlas_resolution:
            density *= 0.7
            placements = _try_pack(charts, density, res, cfg.gutter_texels)
            if placements is not None:
                break
            raise RuntimeError("atlas packing failed at maximum resolution")
        res *= 2
        log.warning("atlas overflow: growing resolution to %d", res)
    # emit mesh with per-chart duplicated vertices
    new_verts, new_uvs, new_faces, face_chart = [], [], [], []
    base = 0
    order = []
    for cid, (chart, (ox, oy, scale)) in enumerate(zip(charts, placements)):
        local = {v: i for i, v in enumerate(chart.verts)}
        uv_tex = (chart.uv - chart.uv.min(axis=0)) * scale + [ox, oy]
        new_verts.append(mesh.vertices[chart.verts])
        new_uvs.append(uv_tex / res)
        for fi in chart.faces:
            tri = [local[t] + base for t in mesh.faces[fi]]
            new_faces.append(tri)
            face_chart.append(cid)
            order.append(fi)
        base += len(chart.verts)
    out = TriangleMesh(np.concatenate(new_verts), np.array(new_faces, dtype=np.int64),
                       uvs=np.concatenate(new_uvs), face_chart=np.array(face_chart))
    return out, res, np.array(order)


def _try_pack(charts, density, res, gutter):
    sizes = []
    for c in charts:
        span = c.uv.max(axis=0) - c.uv.min(axis=0)
        w = span[0] * density + 2 * gutter
        h = span[1] * density + 2 * gutter
        if w > res or h > res:
            return None
        sizes.append((w, h))
    order = sorted(range(len(charts)), key=lambda i: (-sizes[i][1], i))
    placements = [None] * len(charts)
    x = y = shelf_h = 0.0
    for i in order:
        w, h = sizes[i]
        if x + w > res:
            y += shelf_h
            x = 0.0
            shelf_h = 0.0
        if y + h > res:
            return None
        placements[i] = (x + gutter, y + gutter, density)
        x += w
        shelf_h = max(shelf_h, h)
    return placements


def uv_unwrap(mesh: TriangleMesh, cfg: UnwrapConfig | None = None):
    """Full unwrap: charts -> flatten -> pack. Returns (mesh_with_uvs,
    atlas_resolution); every face belongs to exactly one chart."""
    cfg = cfg or UnwrapConfig()
    if mesh.is_empty:
        raise ValueError("cannot unwrap an empty mesh")
    charts = grow_charts(mesh, cfg)
    flat = flatten_charts(mesh, charts, cfg)
    out, res, _ = pack_charts(mesh, flat, cfg)
    return out, res
