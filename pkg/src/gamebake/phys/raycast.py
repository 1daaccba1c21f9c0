"""Exact ray queries against world bodies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RayHit:
    body_id: int
    point: np.ndarray
    normal: np.ndarray
    distance: float


def _ray_sphere(o, d, center, radius):
    oc = o - center
    b = oc @ d
    c = oc @ oc - radius * radius
    disc = b * b - c
    if disc < 0:
        return None
    sq = np.sqrt(disc)
    t = -b - sq
    if t <= 1e-9:
        t = -b + sq
    if t <= 1e-9:
        return None
    p = o + t * d
    return t, p, (p - center) / radius


def _ray_box_local(o, d, half):
    with np.errstate(divide="ignore"):
        inv = 1.0 / d
    t1 = (-half - o) * inv
    t2 = (half - o) * inv
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    t_near = t_lo.max()
    t_far = t_hi.min()
    if t_near > t_far or t_far <= 1e-9:
        return None
    t = t_near if t_near > 1e-9 else t_far
    p = o + t * d
    axis = int(np.abs(p / half).argmax())
    n = np.zeros(3)
    n[axis] = np.sign(p[axis])
    return t, p, n


def _ray_convex(o, d, piece):
    """Slab-style clip against the hull halfspaces."""
    n = piece.equations[:, :3]
    off = piece.equations[:, 3]
    denom = n @ d
    num = -(n @ o + off)
    t_in, t_out = 0.0, np.inf
    n_in = None
    for i in range(len(denom)):
        if abs(denom[i]) < 1e-14:
            if num[i] < 0:
                return None
            continue
        t = num[i] / denom[i]
        if denom[i] < 0:
            if t > t_in:
                t_in, n_in = t, n[i]
        else:
            t_out = min(t_out, t)
        if t_in > t_out:
            return None
    if n_in is None or t_in <= 1e-9:
        return None
    return t_in, o + t_in * d, n_in


def _ray_triangle(o, d, a, b, c):
    e1, e2 = b - a, c - a
    h = np.cross(d, e2)
    det = e1 @ h
    if abs(det) < 1e-14:
        return None
    f = 1.0 / det
    s = o - a
    u = f * (s @ h)
    if u < 0 or u > 1:
        return None
    q = np.cross(s, e1)
    v = f * (d @ q)
    if v < 0 or u + v > 1:
        return None
    t = f * (e2 @ q)
    if t <= 1e-9:
        return None
    n = np.cross(e1, e2)
    n = n / max(np.linalg.norm(n), 1e-20)
    if n @ d > 0:
        n = -n
    return t, o + t * d, n


def raycast(world, origin, direction) -> RayHit | None:
    """Nearest positive-distance hit across all bodies, or None."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    if not np.isclose(np.linalg.norm(d), 1.0, atol=1e-6):
        raise ValueError("ray direction must be normalized")
    best = None
    for bid in sorted(world.bodies):
        body = world.bodies[bid]
        R = body.rotation()
        col = body.collider
        hit = None
        if col.kind == "sphere":
            hit = _ray_sphere(o, d, R @ col.center + body.position, col.radius)
        elif col.kind == "box":
            Rt = R @ col.rotation
            ol = Rt.T @ (o - (R @ col.center + body.position))
            dl = Rt.T @ d
            got = _ray_box_local(ol, dl, col.half_extents)
            if got:
                t, p, n = got
                hit = (t, Rt @ p + R @ col.center + body.position, Rt @ n)
        elif col.kind == "convex":
            ol = R.T @ (o - body.position)
            dl = R.T @ d
            closest = None
            for piece in col.pieces:
                got = _ray_convex(ol, dl, piece)
                if got and (closest is None or got[0] < closest[0]):
                    closest = got
            if closest:
                t, p, n = closest
                hit = (t, R @ p + body.position, R @ n)
        elif col.kind == "trimesh":
            verts = col.mesh.vertices @ R.T + body.position
            closest = None
            for tri in col.mesh.faces:
                got = _ray_triangle(o, d, verts[tri[0]], verts[tri[1]], verts[tri[2]])
                if got and (closest is None or got[0] < closest[0]):
                    closest = got
            hit = closest
        if hit and (best is None or hit[0] < best.distance):
            best = RayHit(body_id=bid, point=hit[1], normal=hit[2], distance=float(hit[0]))
    return best
