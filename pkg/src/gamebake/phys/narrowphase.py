"""Contact generation between collider shapes.

Boxes, convex pieces and (one-off) triangles are all reduced to a world-
space polytope; polytope pairs go through SAT over face normals and edge
cross products, with reference-face clipping for the manifold. Spheres are
special-cased with closest-point queries. Everything is deterministic:
fixed axis order, first-minimum ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Contact:
    point: np.ndarray  # world
    normal: np.ndarray  # unit, from body A to body B
    depth: float  # penetration, > 0


@dataclass
class Poly:
    verts: np.ndarray  # (N,3) world
    faces: list  # list of index arrays, outward CCW
    normals: np.ndarray  # (F,3)
    edges: np.ndarray  # (E,2)
    centroid: np.ndarray


def _order_ccw(idx, normal, verts):
    pts = verts[idx]
    c = pts.mean(axis=0)
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    ang = np.arctan2((pts - c) @ v, (pts - c) @ u)
    return np.asarray(idx)[np.argsort(ang, kind="stable")]


def _edges_from_faces(faces):
    seen = set()
    out = []
    for f in faces:
        for i in range(len(f)):
            a, b = int(f[i]), int(f[(i + 1) % len(f)])
            key = (a, b) if a < b else (b, a)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return np.array(sorted(out), dtype=np.int64)


def poly_from_box(box, rot, pos) -> Poly:
    R = rot @ box.rotation
    c = rot @ box.center + pos
    h = box.half_extents
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
    verts = (signs * h) @ R.T + c
    faces, normals = [], []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            n = R[:, axis] * sign
            idx = np.flatnonzero(signs[:, axis] == sign)
            faces.append(_order_ccw(idx, n, verts))
            normals.append(n)
    return Poly(verts, faces, np.stack(normals), _edges_from_faces(faces), c)


def poly_from_piece(piece, rot, pos) -> Poly:
    verts = piece.vertices @ rot.T + pos
    eqs = piece.equations
    world_n = eqs[:, :3] @ rot.T
    # merge coplanar simplices into polygon faces
    groups = {}
    for fi, tri in enumerate(piece.faces):
        key = (tuple(np.round(world_n[fi], 6)), round(float(eqs[fi, 3]), 6))
        groups.setdefault(key, (world_n[fi], set()))[1].update(int(t) for t in tri)
    faces, normals = [], []
    for (_, _), (n, members) in sorted(groups.items(), key=lambda kv: kv[0]):
        ordered = _order_ccw(sorted(members), n, verts)
        faces.append(ordered)
        normals.append(n)
    return Poly(verts, faces, np.stack(normals), _edges_from_faces(faces), verts.mean(axis=0))


def poly_from_triangle(tri_verts) -> Poly:
    verts = np.asarray(tri_verts, dtype=np.float64)
    n = np.cross(verts[1] - verts[0], verts[2] - verts[0])
    ln = np.linalg.norm(n)
    n = n / ln if ln > 1e-20 else np.array([0.0, 0.0, 1.0])
    faces = [np.array([0, 1, 2]), np.array([0, 2, 1])]
    normals = np.stack([n, -n])
    return Poly(verts, faces, normals, np.array([[0, 1], [0, 2], [1, 2]]), verts.mean(axis=0))


# -- sphere queries -----------------------------------------------------------------


def closest_point_triangle(p, a, b, c):
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return a + ab * (d1 / (d1 - d3))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return a + ac * (d2 / (d2 - d6))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def sphere_vs_sphere(ca, ra, cb, rb):
    d = cb - ca
    dist = np.linalg.norm(d)
    depth = ra + rb - dist
    if depth <= 0:
        return []
    n = d / dist if dist > 1e-12 else np.array([0.0, 0.0, 1.0])
    return [Contact(point=ca + n * (ra - 0.5 * depth), normal=n, depth=float(depth))]


def sphere_vs_poly(center, radius, poly: Poly, flip=False):
    sd = np.array([n @ (center - poly.verts[f[0]]) for f, n in zip(poly.faces, poly.normals)])
    if (sd <= 0).all():  # center inside
        fi = int(sd.argmax())
        n = poly.normals[fi]
        depth = radius - sd[fi]
        point = center - n * sd[fi]
    else:
        best_d, best_p = np.inf, None
        for f in poly.faces:
            pf = poly.verts[f]
            for k in range(1, len(f) - 1):
                q = closest_point_triangle(center, pf[0], pf[k], pf[k + 1])
                d = np.linalg.norm(center - q)
                if d < best_d:
                    best_d, best_p = d, q
        if best_d >= radius:
            return []
        n = (center - best_p) / max(best_d, 1e-12)
        depth = radius - best_d
        point = best_p
    if flip:  # poly is body A, sphere body B
        return [Contact(point=point, normal=n, depth=float(depth))]
    return [Contact(point=point, normal=-n, depth=float(depth))]


def sphere_vs_triangle(center, radius, tri, flip=False):
    q = closest_point_triangle(center, tri[0], tri[1], tri[2])
    d = np.linalg.norm(center - q)
    if d >= radius:
        return []
    if d > 1e-12:
        n = (center - q) / d
    else:
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        n /= max(np.linalg.norm(n), 1e-20)
    depth = radius - d
    if flip:
        return [Contact(point=q, normal=n, depth=float(depth))]
    return [Contact(point=q, normal=-n, depth=float(depth))]


# -- SAT polytope vs polytope ---------------------------------------------------------


def _project(poly: Poly, axis):
    d = poly.verts @ axis
    return d.min(), d.max()


def _sat_axes(pa: Poly, pb: Poly):
    axes = [(n, "A", i) for i, n in enumerate(pa.normals)]
    axes += [(n, "B", i) for i, n in enumerate(pb.normals)]
    ea = pa.verts[pa.edges[:, 1]] - pa.verts[pa.edges[:, 0]]
    eb = pb.verts[pb.edges[:, 1]] - pb.verts[pb.edges[:, 0]]
    for i, da in enumerate(ea):
        for j, db in enumerate(eb):
            cx = np.cross(da, db)
            ln = np.linalg.norm(cx)
            if ln > 1e-9:
                axes.append((cx / ln, "E", (i, j)))
    return axes


def _clip_polygon(points, plane_n, plane_d):
    """Keep the side plane_n . x <= plane_d (Sutherland-Hodgman step)."""
    out = []
    n = len(points)
    for i in range(n):
        cur, nxt = points[i], points[(i + 1) % n]
        dc = plane_n @ cur - plane_d
        dn = plane_n @ nxt - plane_d
        if dc <= 0:
            out.append(cur)
        if (dc < 0 < dn) or (dn < 0 < dc):
            t = dc / (dc - dn)
            out.append(cur + t * (nxt - cur))
    return out


def poly_vs_poly(pa: Poly, pb: Poly, max_contacts=4):
    axes = _sat_axes(pa, pb)
    center_dir = pb.centroid - pa.centroid
    best = None
    for axis, src, ref in axes:
        if axis @ center_dir < 0:
            axis = -axis
        a0, a1 = _project(pa, axis)
        b0, b1 = _project(pb, axis)
        overlap = min(a1, b1) - max(a0, b0)
        if overlap < 0:
            return []
        if best is None or overlap < best[0] - 1e-12:
            best = (overlap, axis, src, ref)
    overlap, axis, src, ref = best
    if src == "E":
        i, j = ref
        p1, q1 = pa.verts[pa.edges[i]]
        p2, q2 = pb.verts[pb.edges[j]]
        pt_a, pt_b = _closest_segment_points(p1, q1, p2, q2)
        return [Contact(point=0.5 * (pt_a + pt_b), normal=axis, depth=float(overlap))]
    # face case: clip the incident face against the reference face's side planes
    if src == "A":
        ref_poly, inc_poly, n_ref = pa, pb, axis
    else:
        ref_poly, inc_poly, n_ref = pb, pa, -axis  # reference normal points out of ref poly
    ref_idx = int(np.argmax(ref_poly.normals @ n_ref))
    ref_face = ref_poly.faces[ref_idx]
    inc_idx = int(np.argmin(inc_poly.normals @ n_ref))
    inc_pts = [inc_poly.verts[i].copy() for i in inc_poly.faces[inc_idx]]
    rf = ref_poly.verts[ref_face]
    for i in range(len(ref_face)):
        e = rf[(i + 1) % len(ref_face)] - rf[i]
        side_n = np.cross(e, n_ref)
        side_n /= max(np.linalg.norm(side_n), 1e-20)
        # keep the inner side (containing the face centroid)
        d = side_n @ rf[i]
        if side_n @ rf.mean(axis=0) > d:
            side_n, d = -side_n, -d
        inc_pts = _clip_polygon(inc_pts, side_n, d)
        if not inc_pts:
            return []
    plane_d = n_ref @ rf[0]
    contacts = []
    for p in inc_pts:
        depth = plane_d - n_ref @ p
        if depth >= 0:
            contacts.append((float(depth), p))
    if not contacts:
        return []
    contacts.sort(key=lambda t: -t[0])
    normal = axis  # already oriented A -> B
    return [Contact(point=p, normal=normal, depth=d) for d, p in contacts[:max_contacts]]


def _closest_segment_points(p1, q1, p2, q2):
    d1, d2 = q1 - p1, q2 - p2
    r = p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    c, b = d1 @ r, d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-14 else 0.0
    t = (b * s + f) / e if e > 1e-14 else 0.0
    t = np.clip(t, 0.0, 1.0)
    s = np.clip((b * t - c) / a, 0.0, 1.0) if a > 1e-14 else 0.0
    return p1 + d1 * s, p2 + d2 * t
