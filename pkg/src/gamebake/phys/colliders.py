"""Collision geometry: box / sphere / convex set / triangle mesh.

Construction from render meshes: PCA-oriented bounding box, Welzl minimal
enclosing sphere, recursive approximate convex decomposition, and
edge-collapse simplification for static triangle-mesh colliders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from ..bake.mesh import TriangleMesh, collapse_short_edges


@dataclass
class BoxCollider:
    half_extents: np.ndarray  # (3,)
    rotation: np.ndarray = None  # (3,3) local orientation
    center: np.ndarray = None  # (3,) local position

    def __post_init__(self):
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        self.rotation = np.eye(3) if self.rotation is None else np.asarray(self.rotation, float)
        self.center = np.zeros(3) if self.center is None else np.asarray(self.center, float)
        if (self.half_extents <= 0).any():
            raise ValueError("box half extents must be positive")

    kind = "box"

    def corners_local(self):
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return (signs * self.half_extents) @ self.rotation.T + self.center

    def volume(self):
        return float(8.0 * np.prod(self.half_extents))


@dataclass
class SphereCollider:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    kind = "sphere"

    def volume(self):
        return float(4.0 / 3.0 * np.pi * self.radius**3)


@dataclass
class ConvexPiece:
    vertices: np.ndarray  # (N,3) local, hull vertices only

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        hull = ConvexHull(self.vertices)
        self.vertices = self.vertices[hull.vertices]
        hull = ConvexHull(self.vertices)
        self._hull = hull
        # orient every simplex outward (scipy does not guarantee winding)
        tris = hull.simplices.copy()
        corners = self.vertices[tris]
        cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        flip = (cross * hull.equations[:, :3]).sum(axis=1) < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]
        self._faces = tris

    @property
    def faces(self):
        return self._faces

    @property
    def equations(self):
        return self._hull.equations  # (F,4): n|offset, n outward

    def volume(self):
        return float(self._hull.volume)

    def centroid(self):
        # volume centroid via signed tetrahedra against the vertex mean
        ref = self.vertices.mean(axis=0)
        tot_v, acc = 0.0, np.zeros(3)
        for tri in self.faces:
            a, b, c = self.vertices[tri]
            v = np.dot(a - ref, np.cross(b - ref, c - ref)) / 6.0
            acc += v * (a + b + c + ref) / 4.0
            tot_v += v
        return acc / tot_v if abs(tot_v) > 1e-18 else ref

    def contains(self, pts, tol=1e-6):
        pts = np.atleast_2d(pts)
        d = pts @ self.equations[:, :3].T + self.equations[:, 3]
        return (d <= tol).all(axis=1)


@dataclass
class ConvexSetCollider:
    pieces: list

    kind = "convex"

    def volume(self):
        return float(sum(p.volume() for p in self.pieces))


@dataclass
class TriMeshCollider:
    mesh: TriangleMesh  # static colliders only

    kind = "trimesh"

    def volume(self):
        return 0.0


# -- construction --------------------------------------------------------------


def pca_box(points: np.ndarray) -> BoxCollider:
    """Oriented bounding box from the principal axes of the vertex cloud."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / max(len(pts), 1)
    _, vecs = np.linalg.eigh(cov)
    if np.linalg.det(vecs) < 0:
        vecs[:, 0] = -vecs[:, 0]
    proj = pts @ vecs
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    half = np.maximum(0.5 * (hi - lo), 1e-9)
    center = vecs @ (0.5 * (hi + lo))
    return BoxCollider(half_extents=half, rotation=vecs, center=center)


def _circumsphere(pts):
    """Exact smallest sphere through 0..4 boundary points."""
    n = len(pts)
    if n == 0:
        return np.zeros(3), 0.0
    if n == 1:
        return pts[0].copy(), 0.0
    if n == 2:
        c = 0.5 * (pts[0] + pts[1])
        return c, float(np.linalg.norm(pts[0] - c))
    A = 2.0 * (pts[1:] - pts[0])
    b = (pts[1:] ** 2).sum(axis=1) - (pts[0] ** 2).sum()
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol, float(np.linalg.norm(pts[0] - sol))


def welzl_sphere(points: np.ndarray, seed: int = 0) -> SphereCollider:
    """Minimal enclosing sphere (iterative move-to-front Welzl)."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pts))
    pts = pts[order]
    center, r = _circumsphere(pts[:1])
    eps = 1e-12
    i = 0
    while i < len(pts):
        if np.linalg.norm(pts[i] - center) <= r * (1 + eps) + eps:
            i += 1
            continue
        # grow with pts[i] on the boundary
        center, r = _circumsphere(pts[i : i + 1])
        for j in range(i):
            if np.linalg.norm(pts[j] - center) <= r * (1 + eps) + eps:
                continue
            center, r = _circumsphere(np.stack([pts[i], pts[j]]))
            for k in range(j):
                if np.linalg.norm(pts[k] - center) <= r * (1 + eps) + eps:
                    continue
                center, r = _circumsphere(np.stack([pts[i], pts[j], pts[k]]))
                for m in range(k):
                    if np.linalg.norm(pts[m] - center) <= r * (1 + eps) + eps:
                        continue
                    center, r = _circumsphere(np.stack([pts[i], pts[j], pts[k], pts[m]]))
        i += 1
    return SphereCollider(center=center, radius=max(r, 1e-9))


def _surface_samples(mesh: TriangleMesh):
    """Point cloud approximating the mesh surface: vertices, edge midpoints,
    face centroids."""
    e = mesh.edges()
    mids = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    return np.concatenate([mesh.vertices, mids, mesh.face_centroids()])


@dataclass
class DecompositionConfig:
    concavity_eps: float = 0.05  # acceptable hull-to-surface distance, world units
    max_pieces: int = 16
    min_vertices: int = 8


def convex_decomposition(mesh: TriangleMesh, cfg: DecompositionConfig | None = None):
    """Recursive approximate convex decomposition.

    Concavity of a candidate hull is the largest distance from a hull-face
    sample to the mesh surface (a pocket the hull spans but the mesh does
    not). The piece splits along that pocket face's plane, moved to touch
    the surface, until every hull fits within `concavity_eps` or the piece
    budget runs out. Returns (ConvexSetCollider, exceeded_budget flag).
    """
    from scipy.spatial import cKDTree

    cfg = cfg or DecompositionConfig()
    surface = cKDTree(_surface_samples(mesh))
    queue = [np.unique(mesh.vertices, axis=0)]
    done: list[ConvexPiece] = []
    exceeded = False
    while queue:
        pts = queue.pop(0)
        if len(pts) < 4:
            continue
        try:
            piece = ConvexPiece(pts)
        except Exception:
            # degenerate (planar) cluster: nothing volumetric to add
            continue
        tri = piece.vertices[piece.faces]
        probes = np.concatenate([tri.mean(axis=1), 0.5 * (tri[:, 0] + tri[:, 1]),
                                 0.5 * (tri[:, 1] + tri[:, 2]), 0.5 * (tri[:, 0] + tri[:, 2])])
        dist, nearest = surface.query(probes)
        worst = int(dist.argmax())
        if dist[worst] <= cfg.concavity_eps or len(pts) < cfg.min_vertices:
            done.append(piece)
            continue
        if len(done) + len(queue) + 2 > cfg.max_pieces:
            exceeded = True
            done.append(piece)
            continue
        # split across the pocket: plane through the nearest surface point,
        # normal along the hull-to-surface defect direction
        q = surface.data[nearest[worst]]
        n = probes[worst] - q
        ln = np.linalg.norm(n)
        if ln < 1e-12:
            done.append(piece)
            continue
        n = n / ln
        off = pts @ n - q @ n
        left, right = pts[off <= 1e-9], pts[off >= -1e-9]
        if len(left) == len(pts) or len(right) == len(pts):
            done.append(piece)  # split failed to separate; accept as is
            continue
        queue += [left, right]
    return ConvexSetCollider(pieces=done), exceeded


def simplify_trimesh(mesh: TriangleMesh, max_faces: int) -> TriMeshCollider:
    """Shortest-edge collapse until the face budget is met."""
    out = mesh
    guard = 0
    while out.n_faces > max_faces and guard < 64:
        e = out.edges()
        lens = np.linalg.norm(out.vertices[e[:, 0]] - out.vertices[e[:, 1]], axis=1)
        target = np.quantile(lens, 0.3)
        nxt = collapse_short_edges(out, min_edge=target * 1.001)
        if nxt.n_faces == out.n_faces:
            break
        out = nxt
        guard += 1
    return TriMeshCollider(mesh=out)


def make_collider(mesh: TriangleMesh, kind: str, cfg: DecompositionConfig | None = None,
                  max_faces: int = 512, seed: int = 0):
    """Build the requested collider variant from a render mesh."""
    if mesh.is_empty:
        raise ValueError("cannot build a collider from an empty mesh")
    if kind == "box":
        return pca_box(mesh.vertices)
    if kind == "sphere":
        return welzl_sphere(mesh.vertices, seed=seed)
    if kind == "convex":
        col, exceeded = convex_decomposition(mesh, cfg)
        if exceeded:
            import logging

            logging.getLogger(__name__).warning(
                "convex decomposition hit the piece budget; best-effort set returned")
        return col
    if kind == "trimesh":
        return simplify_trimesh(mesh, max_faces)
    raise ValueError(f"unknown collider kind {kind!r}")


# -- mass properties -----------------------------------------------------------


def collider_com(col) -> np.ndarray:
    if col.kind == "box":
        return col.center.copy()
    if col.kind == "sphere":
        return col.center.copy()
    if col.kind == "convex":
        vols = np.array([p.volume() for p in col.pieces])
        cents = np.stack([p.centroid() for p in col.pieces])
        return (cents * vols[:, None]).sum(axis=0) / max(vols.sum(), 1e-18)
    if col.kind == "trimesh":
        return col.mesh.vertices.mean(axis=0)
    raise ValueError(col.kind)


def _tetra_inertia_about(origin, a, b, c, density):
    """Inertia of the tetra (origin reference) via the canonical covariance map."""
    v = np.stack([a, b, c]) - origin
    detj = np.linalg.det(v.T)
    cov_canon = np.full((3, 3), 1.0 / 120.0) + np.eye(3) * (1.0 / 120.0)
    cov = density * detj * (v.T @ cov_canon @ v)
    return cov, density * detj / 6.0


def inertia_tensor(col, mass: float):
    """Body-frame inertia about the collider COM (uniform density)."""
    if col.kind == "sphere":
        return np.eye(3) * (0.4 * mass * col.radius**2)
    if col.kind == "box":
        w, h, d = 2.0 * col.half_extents
        local = np.diag([h * h + d * d, w * w + d * d, w * w + h * h]) * (mass / 12.0)
        return col.rotation @ local @ col.rotation.T
    if col.kind == "convex":
        com = collider_com(col)
        total_v = max(col.volume(), 1e-18)
        density = mass / total_v
        cov = np.zeros((3, 3))
        for p in col.pieces:
            for tri in p.faces:
                a, b, c = p.vertices[tri]
                cv, _ = _tetra_inertia_about(com, a, b, c, density)
                cov += cv
        return np.eye(3) * np.trace(cov) - cov
    if col.kind == "trimesh":
        return np.eye(3)  # static only; never used dynamically
    raise ValueError(col.kind)
