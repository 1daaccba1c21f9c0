import numpy as np
import pytest

from gamebake.bake import TriangleMesh
from gamebake.phys import (
    BoxCollider,
    PhysicsWorld,
    RigidBody,
    SimulationError,
    SolverSettings,
    SphereCollider,
    TriMeshCollider,
    raycast,
    run_replay,
)


def ground_trimesh(half=5.0, z=0.0):
    v = np.array([[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]])
    f = np.array([[0, 1, 2], [0, 2, 3]])
    return TriMeshCollider(mesh=TriangleMesh(v, f))


def sphere_body(bid, pos, r=0.5, mass=1.0, vel=(0, 0, 0), restitution=0.2, friction=0.5):
    return RigidBody(body_id=bid, collider=SphereCollider(center=np.zeros(3), radius=r),
                     mass=mass, position=np.array(pos, dtype=float),
                     linear_velocity=np.array(vel, dtype=float),
                     restitution=restitution, friction=friction)


def test_free_fall_matches_discrete_recurrence():
    w = PhysicsWorld(gravity=np.array([0.0, 0.0, -9.81]))
    w.add_body(sphere_body(0, [0, 0, 100.0]))
    dt, n = 1.0 / 60.0, 50
    for _ in range(n):
        w.step(dt)
    b = w.body(0)
    np.testing.assert_allclose(b.linear_velocity, [0, 0, -9.81 * n * dt], rtol=1e-12)
    z = 100.0
    v = 0.0
    for _ in range(n):
        v += -9.81 * dt
        z += v * dt
    np.testing.assert_allclose(b.position[2], z, rtol=1e-12)


def test_resting_sphere_penetration_within_slop():
    w = PhysicsWorld()
    w.add_body(RigidBody(body_id=0, collider=ground_trimesh(), mass=0.0))
    w.add_body(sphere_body(1, [0, 0, 0.55], r=0.5, restitution=0.0))
    dt = 1.0 / 60.0
    for _ in range(300):
        w.step(dt)
    b = w.body(1)
    penetration = 0.5 - b.position[2]
    assert penetration <= w.solver.slop + 1e-9
    assert abs(b.position[0]) < 1e-6 and abs(b.position[1]) < 1e-6
    # lateral drift per step stays tiny
    assert np.linalg.norm(b.linear_velocity[:2]) < 1e-6


def test_equal_mass_elastic_head_on_swaps_velocities():
    w = PhysicsWorld(gravity=np.zeros(3))
    w.add_body(sphere_body(0, [-0.6, 0, 0], vel=[1.0, 0, 0], restitution=1.0, friction=0.0))
    w.add_body(sphere_body(1, [0.6, 0, 0], vel=[-1.0, 0, 0], restitution=1.0, friction=0.0))
    dt = 1e-3
    for _ in range(250):
        w.step(dt)
    v0 = w.body(0).linear_velocity
    v1 = w.body(1).linear_velocity
    np.testing.assert_allclose(v0, [-1.0, 0, 0], atol=1e-6)
    np.testing.assert_allclose(v1, [1.0, 0, 0], atol=1e-6)


def test_frictionless_impacts_conserve_momentum():
    rng = np.random.default_rng(7)
    for trial in range(6):
        w = PhysicsWorld(gravity=np.zeros(3))
        for i in range(3):
            pos = rng.uniform(-1, 1, size=3)
            vel = rng.uniform(-1, 1, size=3)
            w.add_body(sphere_body(i, pos, r=0.45, mass=float(rng.uniform(0.5, 2.0)),
                                   vel=vel, restitution=float(rng.uniform(0, 1)), friction=0.0))
        p0 = sum(w.body(i).mass * w.body(i).linear_velocity for i in range(3))
        for _ in range(60):
            w.step(1e-3)
        p1 = sum(w.body(i).mass * w.body(i).linear_velocity for i in range(3))
        scale = max(np.linalg.norm(p0), 1.0)
        assert np.linalg.norm(p1 - p0) / scale < 1e-6


def test_energy_never_increases_frictionless():
    # dt small enough that contacts resolve within the slop: the solver may
    # dissipate but must not manufacture energy
    rng = np.random.default_rng(11)
    for trial in range(4):
        w = PhysicsWorld(gravity=np.array([0.0, 0.0, -9.81]))
        w.add_body(RigidBody(body_id=0, collider=ground_trimesh(), mass=0.0))
        for i in range(1, 4):
            w.add_body(sphere_body(i, [rng.uniform(-1, 1), rng.uniform(-1, 1), 0.5 + 0.55 * i],
                                   r=0.25, vel=rng.uniform(-0.05, 0.05, size=3),
                                   restitution=float(rng.uniform(0.0, 1.0)), friction=0.0))
        energy = w.kinetic_energy() + w.potential_energy()
        for _ in range(400):
            w.step(5e-4)
            e = w.kinetic_energy() + w.potential_energy()
            assert e <= energy * (1 + 1e-6) + 1e-9
            energy = e


def test_replays_bit_identical():
    def build():
        w = PhysicsWorld()
        w.add_body(RigidBody(body_id=0, collider=ground_trimesh(), mass=0.0))
        w.add_body(sphere_body(1, [0.1, 0.0, 1.0], vel=[0.3, 0, 0]))
        w.add_body(RigidBody(body_id=2, collider=BoxCollider(half_extents=[0.2, 0.2, 0.2]),
                             mass=2.0, position=np.array([0.0, 0.5, 1.5])))
        return w

    script = {10: {1: {"impulse": [0.0, 0.4, 0.0]}}}
    r1 = run_replay(build(), 1 / 60.0, 120, script)
    r2 = run_replay(build(), 1 / 60.0, 120, script)
    assert r1 == r2
    assert r1.encode() == r2.encode()


def test_box_rests_on_trimesh_ground():
    w = PhysicsWorld()
    w.add_body(RigidBody(body_id=0, collider=ground_trimesh(), mass=0.0))
    w.add_body(RigidBody(body_id=1, collider=BoxCollider(half_extents=[0.3, 0.25, 0.2]),
                         mass=1.0, position=np.array([0.0, 0.0, 0.25])))
    for _ in range(240):
        w.step(1 / 60.0)
    b = w.body(1)
    assert 0.2 - w.solver.slop * 2 <= b.position[2] <= 0.21
    # box should stay upright
    up = b.rotation() @ np.array([0, 0, 1.0])
    assert up[2] > 0.99


def test_quaternion_stays_normalized():
    w = PhysicsWorld(gravity=np.zeros(3))
    b = RigidBody(body_id=0, collider=BoxCollider(half_extents=[0.3, 0.2, 0.1]), mass=1.0,
                  position=np.zeros(3), angular_velocity=np.array([3.0, -2.0, 1.0]))
    w.add_body(b)
    for _ in range(500):
        w.step(1 / 120.0)
        assert abs(np.linalg.norm(b.orientation) - 1.0) < 1e-6


def test_nonfinite_state_raises_named_body():
    w = PhysicsWorld(gravity=np.zeros(3))
    w.add_body(sphere_body(5, [0, 0, 1.0]))
    w.body(5).linear_velocity[0] = np.nan
    with pytest.raises(SimulationError, match="body 5"):
        w.step(1 / 60.0)


def test_dynamic_trimesh_rejected():
    with pytest.raises(ValueError, match="trimesh"):
        RigidBody(body_id=0, collider=ground_trimesh(), mass=1.0)


def test_dt_must_be_positive():
    w = PhysicsWorld()
    with pytest.raises(ValueError):
        w.step(0.0)


# -- raycast -----------------------------------------------------------------------


def test_ray_hits_sphere_at_distance_minus_radius():
    w = PhysicsWorld()
    w.add_body(sphere_body(0, [0, 0, 3.0], r=0.5))
    hit = raycast(w, np.zeros(3), np.array([0.0, 0.0, 1.0]))
    assert hit is not None and hit.body_id == 0
    np.testing.assert_allclose(hit.distance, 2.5, rtol=1e-12)
    np.testing.assert_allclose(hit.normal, [0, 0, -1.0], atol=1e-12)


def test_ray_parallel_above_plane_misses():
    w = PhysicsWorld()
    w.add_body(RigidBody(body_id=0, collider=ground_trimesh(z=0.0), mass=0.0))
    hit = raycast(w, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    assert hit is None


def test_nearest_of_two_bodies_wins():
    w = PhysicsWorld()
    w.add_body(sphere_body(0, [0, 0, 5.0], r=0.5))
    w.add_body(sphere_body(1, [0, 0, 2.0], r=0.5))
    hit = raycast(w, np.zeros(3), np.array([0.0, 0.0, 1.0]))
    assert hit.body_id == 1


def test_raycast_box_and_convex():
    from gamebake.phys import ConvexPiece, ConvexSetCollider

    w = PhysicsWorld()
    w.add_body(RigidBody(body_id=0, collider=BoxCollider(half_extents=[0.5, 0.5, 0.5]),
                         mass=0.0, position=np.array([3.0, 0.0, 0.0])))
    cube_pts = np.array([[x, y, z] for x in (-0.4, 0.4) for y in (-0.4, 0.4) for z in (-0.4, 0.4)])
    w.add_body(RigidBody(body_id=1, collider=ConvexSetCollider(pieces=[ConvexPiece(cube_pts)]),
                         mass=0.0, position=np.array([-3.0, 0.0, 0.0])))
    hit = raycast(w, np.zeros(3), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(hit.distance, 2.5, rtol=1e-12)
    hit2 = raycast(w, np.zeros(3), np.array([-1.0, 0.0, 0.0]))
    np.testing.assert_allclose(hit2.distance, 2.6, rtol=1e-12)
