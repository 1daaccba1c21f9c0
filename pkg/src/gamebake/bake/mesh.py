"""Triangle mesh container and the four-pass post-processing pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V,3) world units
    faces: np.ndarray  # (F,3) vertex indices
    uvs: np.ndarray | None = None  # (V,2) in [0,1]^2 after unwrap
    face_chart: np.ndarray | None = None  # (F,) chart id after unwrap

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def is_empty(self):
        return self.n_faces == 0

    def face_corners(self):
        return self.vertices[self.faces]  # (F,3,3)

    def face_normals(self, eps=1e-20):
        c = self.face_corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), eps)

    def face_areas(self):
        c = self.face_corners()
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def face_centroids(self):
        return self.face_corners().mean(axis=1)

    def edges(self, unique=True):
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0) if unique else e

    def boundary_edges(self):
        """Edges referenced by exactly one face."""
        e = self.edges(unique=False)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def compact(self):
        """Drop unreferenced vertices; returns a new mesh."""
        used = np.unique(self.faces) if self.faces.size else np.zeros(0, np.int64)
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(used.size)
        return TriangleMesh(self.vertices[used], remap[self.faces],
                            self.uvs[used] if self.uvs is not None else None,
                            self.face_chart)


@dataclass
class PostprocessConfig:
    min_component_faces: int = 12
    weld_eps: float = 1e-6
    max_edge: float = 0.0  # 0 disables splitting
    min_edge: float = 0.0  # 0 disables collapsing
    max_obtuse_deg: float = 179.0
    remesh_iters: int = 1
    visibility_prune: bool = True


class EmptyMeshError(RuntimeError):
    pass


def drop_degenerate_faces(mesh: TriangleMesh, area_eps=1e-14) -> TriangleMesh:
    f = mesh.faces
    keep = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    mesh2 = TriangleMesh(mesh.vertices, f[keep], mesh.uvs)
    keep2 = mesh2.face_areas() > area_eps
    return TriangleMesh(mesh2.vertices, mesh2.faces[keep2], mesh2.uvs)


def visible_faces(mesh: TriangleMesh, cameras) -> np.ndarray:
    """Boolean mask of faces rasterized by at least one camera."""
    from .raster import rasterize_mesh

    seen = np.zeros(mesh.n_faces, dtype=bool)
    for cam in cameras:
        gb = rasterize_mesh(mesh, cam)
        ids = gb.face_id[gb.face_id >= 0]
        seen[np.unique(ids)] = True
    return seen


def remove_small_components(mesh: TriangleMesh, min_faces: int) -> TriangleMesh:
    if mesh.is_empty or min_faces <= 1:
        return mesh
    e = mesh.edges()
    n = mesh.n_vertices
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    face_label = labels[mesh.faces[:, 0]]
    counts = np.bincount(face_label, minlength=labels.max() + 1)
    keep = counts[face_label] >= min_faces
    return TriangleMesh(mesh.vertices, mesh.faces[keep], mesh.uvs).compact()


def weld_vertices(mesh: TriangleMesh, eps: float) -> TriangleMesh:
    """Merge vertices closer than eps (grid snap), then drop degenerates."""
    if mesh.n_vertices == 0:
        return mesh
    quant = np.round(mesh.vertices / max(eps, 1e-12)).astype(np.int64)
    _, first, inverse = np.unique(quant, axis=0, return_index=True, return_inverse=True)
    new_verts = mesh.vertices[first]
    new_faces = inverse[mesh.faces]
    return drop_degenerate_faces(TriangleMesh(new_verts, new_faces)).compact()


def _edge_face_map(faces):
    m = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            m.setdefault(key, []).append(fi)
    return m


def split_long_edges(mesh: TriangleMesh, max_edge: float) -> TriangleMesh:
    verts = list(mesh.vertices)
    faces = mesh.faces.copy()
    lengths = np.linalg.norm(mesh.vertices[mesh.faces[:, [1, 2, 0]]] - mesh.face_corners(), axis=2)
    emap = _edge_face_map(faces)
    long_edges = [(float(np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])), a, b)
                  for (a, b) in emap if np.linalg.norm(mesh.vertices[a] - mesh.vertices[b]) > max_edge]
    long_edges.sort(key=lambda t: (-t[0], t[1], t[2]))
    touched = np.zeros(len(faces), dtype=bool)
    out_faces = []
    removed = set()
    for _, a, b in long_edges:
        fids = [f for f in emap[(a, b) if a < b else (b, a)] if not touched[f]]
        if not fids:
            continue
        mid = len(verts)
        verts.append(0.5 * (np.asarray(verts[a]) + np.asarray(verts[b])))
        for fi in fids:
            tri = faces[fi]
            c = [v for v in tri if v != a and v != b]
            if len(c) != 1:
                continue
            touched[fi] = True
            removed.add(fi)
            # preserve winding: replace the a->b edge with a->m, m->b
            ia = list(tri).index(a)
            if tri[(ia + 1) % 3] == b:
                out_faces.append([a, mid, c[0]])
                out_faces.append([mid, b, c[0]])
            else:
                out_faces.append([b, mid, c[0]])
                out_faces.append([mid, a, c[0]])
    kept = [f for i, f in enumerate(faces) if i not in removed]
    all_faces = np.array(kept + out_faces, dtype=np.int64) if (kept or out_faces) else np.zeros((0, 3), np.int64)
    return drop_degenerate_faces(TriangleMesh(np.array(verts), all_faces))


def collapse_short_edges(mesh: TriangleMesh, min_edge: float) -> TriangleMesh:
    verts = mesh.vertices.copy()
    remap = np.arange(mesh.n_vertices)
    e = mesh.edges()
    lens = np.linalg.norm(verts[e[:, 0]] - verts[e[:, 1]], axis=1)
    order = np.argsort(lens, kind="stable")
    merged = np.zeros(mesh.n_vertices, dtype=bool)
    for idx in order:
        if lens[idx] >= min_edge:
            break
        a, b = e[idx]
        if merged[a] or merged[b]:
            continue
        verts[a] = 0.5 * (verts[a] + verts[b])
        remap[b] = a
        merged[a] = merged[b] = True
    faces = remap[mesh.faces]
    return drop_degenerate_faces(TriangleMesh(verts, faces)).compact()


def drop_obtuse_slivers(mesh: TriangleMesh, max_deg: float) -> TriangleMesh:
    if mesh.is_empty:
        return mesh
    c = mesh.face_corners()
    angles = []
    for i in range(3):
        u = c[:, (i + 1) % 3] - c[:, i]
        v = c[:, (i + 2) % 3] - c[:, i]
        cosang = (u * v).sum(1) / np.maximum(np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1), 1e-20)
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1, 1))))
    worst = np.max(angles, axis=0)
    return TriangleMesh(mesh.vertices, mesh.faces[worst <= max_deg], mesh.uvs).compact()


def postprocess_mesh(mesh: TriangleMesh, cameras, cfg: PostprocessConfig) -> TriangleMesh:
    """Visibility pruning, floater removal, welding, then light remeshing."""
    if mesh.is_empty:
        raise EmptyMeshError("empty input mesh")
    out = mesh
    if cfg.visibility_prune and cameras:
        keep = visible_faces(out, cameras)
        if not keep.any():
            raise EmptyMeshError("no visible geometry")
        out = TriangleMesh(out.vertices, out.faces[keep]).compact()
    out = remove_small_components(out, cfg.min_component_faces)
    out = weld_vertices(out, cfg.weld_eps)
    for _ in range(cfg.remesh_iters):
        if cfg.max_edge > 0:
            out = split_long_edges(out, cfg.max_edge)
        if cfg.min_edge > 0:
            out = collapse_short_edges(out, cfg.min_edge)
    out = drop_obtuse_slivers(out, cfg.max_obtuse_deg)
    if out.is_empty:
        raise EmptyMeshError("post-processing removed all faces")
    return out
