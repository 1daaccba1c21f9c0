"""Rigid-body world: semi-implicit Euler + sequential impulses.

Step order: integrate velocities (gravity, external actions) -> broadphase
AABB pairs (sorted by body-id pair) -> narrowphase -> warm iteration of
normal/friction impulses with restitution -> integrate positions -> a
positional projection pass that removes penetration beyond the slop.
Every stage is sequential and ordered, so stepping is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .colliders import collider_com, inertia_tensor
from .narrowphase import (
    Contact,
    poly_from_box,
    poly_from_piece,
    poly_from_triangle,
    poly_vs_poly,
    sphere_vs_poly,
    sphere_vs_sphere,
    sphere_vs_triangle,
)


class SimulationError(RuntimeError):
    pass


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@dataclass
class RigidBody:
    body_id: int
    collider: object
    mass: float = 0.0  # 0 => static
    friction: float = 0.5
    restitution: float = 0.2
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.orientation = np.asarray(self.orientation, dtype=np.float64)
        self.linear_velocity = np.asarray(self.linear_velocity, dtype=np.float64)
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=np.float64)
        if self.mass < 0:
            raise ValueError("negative mass")
        if self.is_static:
            self.inv_mass = 0.0
            self.inv_inertia_body = np.zeros((3, 3))
        else:
            if self.collider.kind == "trimesh":
                raise ValueError("dynamic bodies cannot use trimesh colliders")
            self.inv_mass = 1.0 / self.mass
            self.inv_inertia_body = np.linalg.inv(inertia_tensor(self.collider, self.mass))

    @property
    def is_static(self):
        return self.mass == 0.0

    def rotation(self):
        return quat_to_matrix(self.orientation)

    def inv_inertia_world(self):
        R = self.rotation()
        return R @ self.inv_inertia_body @ R.T

    def velocity_at(self, point):
        return self.linear_velocity + np.cross(self.angular_velocity, point - self.position)

    def world_aabb(self, margin=0.0):
        R = self.rotation()
        col = self.collider
        if col.kind == "sphere":
            c = R @ col.center + self.position
            r = col.radius + margin
            return c - r, c + r
        if col.kind == "box":
            pts = col.corners_local() @ R.T + self.position
        elif col.kind == "convex":
            pts = np.concatenate([p.vertices for p in col.pieces]) @ R.T + self.position
        else:
            pts = col.mesh.vertices @ R.T + self.position
        return pts.min(axis=0) - margin, pts.max(axis=0) + margin


@dataclass
class SolverSettings:
    iterations: int = 10
    slop: float = 1e-3
    baumgarte: float = 0.2
    # approach speed below this never bounces; ~2 g dt at 60 Hz keeps
    # resting contacts from micro-bouncing off per-step gravity kicks
    restitution_threshold: float = 0.3
    max_correction: float = 0.2


@dataclass
class PhysicsWorld:
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    solver: SolverSettings = field(default_factory=SolverSettings)
    time: float = 0.0

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=np.float64)
        self.bodies: dict[int, RigidBody] = {}

    def add_body(self, body: RigidBody):
        if body.body_id in self.bodies:
            raise ValueError(f"duplicate body id {body.body_id}")
        self.bodies[body.body_id] = body
        return body.body_id

    def body(self, body_id) -> RigidBody:
        return self.bodies[body_id]

    # -- collision plumbing ------------------------------------------------------

    def _shape_world(self, body: RigidBody):
        R = body.rotation()
        return R, body.position

    def _pair_contacts(self, a: RigidBody, b: RigidBody):
        """Contacts with normals oriented from a to b."""
        Ra, pa = self._shape_world(a)
        Rb, pb = self._shape_world(b)
        ka, kb = a.collider.kind, b.collider.kind

        def polys(body, R, p):
            col = body.collider
            if col.kind == "box":
                return [poly_from_box(col, R, p)]
            if col.kind == "convex":
                return [poly_from_piece(piece, R, p) for piece in col.pieces]
            raise ValueError(col.kind)

        if ka == "sphere" and kb == "sphere":
            return sphere_vs_sphere(Ra @ a.collider.center + pa, a.collider.radius,
                                    Rb @ b.collider.center + pb, b.collider.radius)
        out = []
        if ka == "sphere":
            # sphere is body A: normal must run sphere -> other
            c = Ra @ a.collider.center + pa
            r = a.collider.radius
            if kb == "trimesh":
                for tri in _candidate_triangles(b, Rb, pb, c, r):
                    out += sphere_vs_triangle(c, r, tri, flip=False)
            else:
                for poly in polys(b, Rb, pb):
                    out += sphere_vs_poly(c, r, poly, flip=False)
            return out
        if kb == "sphere":
            # sphere is body B: normal must run other -> sphere
            c = Rb @ b.collider.center + pb
            r = b.collider.radius
            if ka == "trimesh":
                for tri in _candidate_triangles(a, Ra, pa, c, r):
                    out += sphere_vs_triangle(c, r, tri, flip=True)
            else:
                for poly in polys(a, Ra, pa):
                    out += sphere_vs_poly(c, r, poly, flip=True)
            return out
        if ka == "trimesh" or kb == "trimesh":
            flipped = ka == "trimesh"
            mesh_body, solid = (a, b) if flipped else (b, a)
            Rm, pm = self._shape_world(mesh_body)
            Rs, ps = self._shape_world(solid)
            lo, hi = solid.world_aabb(margin=self.solver.slop)
            for tri in _candidate_triangles_aabb(mesh_body, Rm, pm, lo, hi):
                tri_poly = poly_from_triangle(tri)
                for sp in polys(solid, Rs, ps):
                    cs = poly_vs_poly(sp, tri_poly)  # normals solid -> triangle
                    if flipped:
                        out += [Contact(x.point, -x.normal, x.depth) for x in cs]
                    else:
                        out += cs
            return out
        for qa in polys(a, Ra, pa):
            for qb in polys(b, Rb, pb):
                out += poly_vs_poly(qa, qb)
        return out

    def contacts(self):
        ids = sorted(self.bodies)
        margin = self.solver.slop
        found = []
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                a, b = self.bodies[ids[i]], self.bodies[ids[j]]
                if a.is_static and b.is_static:
                    continue
                lo_a, hi_a = a.world_aabb(margin)
                lo_b, hi_b = b.world_aabb(margin)
                if (lo_a > hi_b).any() or (lo_b > hi_a).any():
                    continue
                for c in self._pair_contacts(a, b):
                    found.append((ids[i], ids[j], c))
        return found

    # -- stepping --------------------------------------------------------------------

    def step(self, dt: float, actions: dict | None = None):
        """Advance by dt. `actions` maps body id to {impulse, force, torque}."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        actions = actions or {}
        ids = sorted(self.bodies)
        # 1. integrate velocities
        for bid in ids:
            b = self.bodies[bid]
            if b.is_static:
                continue
            b.linear_velocity = b.linear_velocity + self.gravity * dt
            act = actions.get(bid)
            if act:
                if "force" in act:
                    b.linear_velocity = b.linear_velocity + np.asarray(act["force"]) * (dt * b.inv_mass)
                if "impulse" in act:
                    b.linear_velocity = b.linear_velocity + np.asarray(act["impulse"]) * b.inv_mass
                if "torque" in act:
                    b.angular_velocity = b.angular_velocity + b.inv_inertia_world() @ (
                        np.asarray(act["torque"]) * dt)
        # 2-4. contacts and impulse solve
        contact_list = self.contacts()
        self._solve_velocity(contact_list)
        # 5. integrate positions
        for bid in ids:
            b = self.bodies[bid]
            if b.is_static:
                continue
            b.position = b.position + b.linear_velocity * dt
            w = b.angular_velocity
            if w @ w > 0:
                dq = quat_mul(np.array([0.0, w[0], w[1], w[2]]), b.orientation) * (0.5 * dt)
                b.orientation = b.orientation + dq
            b.orientation = b.orientation / np.linalg.norm(b.orientation)
        # 6. positional correction on refreshed contacts
        self._solve_position()
        self.time += dt
        for bid in ids:
            b = self.bodies[bid]
            state = np.concatenate([b.position, b.orientation, b.linear_velocity, b.angular_velocity])
            if not np.all(np.isfinite(state)):
                raise SimulationError(f"non-finite state on body {bid}")

    def _solve_velocity(self, contact_list):
        s = self.solver
        prepared = []
        for ia, ib, c in contact_list:
            a, b = self.bodies[ia], self.bodies[ib]
            ra = c.point - a.position
            rb = c.point - b.position
            n = c.normal
            inv_ia = a.inv_inertia_world()
            inv_ib = b.inv_inertia_world()
            k_n = a.inv_mass + b.inv_mass
            k_n += n @ (np.cross(inv_ia @ np.cross(ra, n), ra))
            k_n += n @ (np.cross(inv_ib @ np.cross(rb, n), rb))
            v_rel = b.velocity_at(c.point) - a.velocity_at(c.point)
            vn0 = n @ v_rel
            e = max(a.restitution, b.restitution)
            bounce = e * -vn0 if -vn0 > s.restitution_threshold else 0.0
            # friction frame
            helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            t1 = np.cross(n, helper)
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(n, t1)
            k_t = []
            for t in (t1, t2):
                kt = a.inv_mass + b.inv_mass
                kt += t @ (np.cross(inv_ia @ np.cross(ra, t), ra))
                kt += t @ (np.cross(inv_ib @ np.cross(rb, t), rb))
                k_t.append(kt)
            mu = float(np.sqrt(a.friction * b.friction))
            prepared.append({"a": a, "b": b, "ra": ra, "rb": rb, "n": n, "t": (t1, t2),
                             "k_n": k_n, "k_t": k_t, "bounce": bounce, "mu": mu,
                             "inv_ia": inv_ia, "inv_ib": inv_ib,
                             "lam_n": 0.0, "lam_t": [0.0, 0.0]})
        for _ in range(s.iterations):
            for con in prepared:
                a, b = con["a"], con["b"]
                n, ra, rb = con["n"], con["ra"], con["rb"]
                v_rel = (b.linear_velocity + np.cross(b.angular_velocity, rb)
                         - a.linear_velocity - np.cross(a.angular_velocity, ra))
                vn = n @ v_rel
                if con["k_n"] > 0:
                    dlam = -(vn - con["bounce"]) / con["k_n"]
                    new = max(con["lam_n"] + dlam, 0.0)
                    dlam = new - con["lam_n"]
                    con["lam_n"] = new
                    self._apply_impulse(a, b, n * dlam, ra, rb, con)
                # friction
                max_f = con["mu"] * con["lam_n"]
                for k, t in enumerate(con["t"]):
                    v_rel = (b.linear_velocity + np.cross(b.angular_velocity, rb)
                             - a.linear_velocity - np.cross(a.angular_velocity, ra))
                    vt = t @ v_rel
                    if con["k_t"][k] <= 0:
                        continue
                    dlam = -vt / con["k_t"][k]
                    new = float(np.clip(con["lam_t"][k] + dlam, -max_f, max_f))
                    dlam = new - con["lam_t"][k]
                    con["lam_t"][k] = new
                    self._apply_impulse(a, b, t * dlam, ra, rb, con)

    @staticmethod
    def _apply_impulse(a, b, j, ra, rb, con):
        a.linear_velocity = a.linear_velocity - j * a.inv_mass
        a.angular_velocity = a.angular_velocity - con["inv_ia"] @ np.cross(ra, j)
        b.linear_velocity = b.linear_velocity + j * b.inv_mass
        b.angular_velocity = b.angular_velocity + con["inv_ib"] @ np.cross(rb, j)

    def _solve_position(self):
        # one correction per body pair (deepest contact), so stacked manifold
        # points cannot compound into an overshoot
        s = self.solver
        deepest = {}
        for ia, ib, c in self.contacts():
            key = (ia, ib)
            if key not in deepest or c.depth > deepest[key].depth:
                deepest[key] = c
        for (ia, ib), c in sorted(deepest.items()):
            a, b = self.bodies[ia], self.bodies[ib]
            corr = s.baumgarte * max(c.depth - s.slop, 0.0)
            corr = min(corr, s.max_correction)
            if corr <= 0:
                continue
            total = a.inv_mass + b.inv_mass
            if total <= 0:
                continue
            shift = c.normal * (corr / total)
            a.position = a.position - shift * a.inv_mass
            b.position = b.position + shift * b.inv_mass

    # -- bookkeeping -----------------------------------------------------------------

    def snapshot(self):
        out = []
        for bid in sorted(self.bodies):
            b = self.bodies[bid]
            out.append({
                "id": bid,
                "pos": b.position.tolist(),
                "quat": b.orientation.tolist(),
                "lin_vel": b.linear_velocity.tolist(),
                "ang_vel": b.angular_velocity.tolist(),
            })
        return {"t": self.time, "bodies": out}

    def kinetic_energy(self):
        e = 0.0
        for b in self.bodies.values():
            if b.is_static:
                continue
            e += 0.5 * b.mass * (b.linear_velocity @ b.linear_velocity)
            if b.collider.kind != "trimesh":
                inertia = np.linalg.inv(b.inv_inertia_world())
                e += 0.5 * b.angular_velocity @ inertia @ b.angular_velocity
        return float(e)

    def potential_energy(self):
        e = 0.0
        for b in self.bodies.values():
            if not b.is_static:
                e -= b.mass * (self.gravity @ b.position)
        return float(e)


def _candidate_triangles_aabb(body, R, p, lo, hi):
    mesh = body.collider.mesh
    verts = mesh.vertices @ R.T + p
    tris = verts[mesh.faces]
    t_lo = tris.min(axis=1)
    t_hi = tris.max(axis=1)
    hit = ~((t_lo > hi).any(axis=1) | (t_hi < lo).any(axis=1))
    return tris[hit]


def _candidate_triangles(body, R, p, center, radius):
    lo = center - radius - 1e-6
    hi = center + radius + 1e-6
    return _candidate_triangles_aabb(body, R, p, lo, hi)


def run_replay(world: PhysicsWorld, dt: float, steps: int, script=None):
    """Run `steps` fixed steps, returning line-delimited JSON snapshot text.

    `script` maps step index -> actions dict. Output bytes are reproducible.
    """
    script = script or {}
    lines = [json.dumps(world.snapshot())]
    for k in range(steps):
        world.step(dt, script.get(k) or script.get(str(k)))
        lines.append(json.dumps(world.snapshot()))
    return "\n".join(lines) + "\n"
