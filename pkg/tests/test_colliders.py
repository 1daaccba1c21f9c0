import numpy as np

from gamebake.bake import TriangleMesh
from gamebake.phys import (
    DecompositionConfig,
    convex_decomposition,
    inertia_tensor,
    make_collider,
    pca_box,
    simplify_trimesh,
    welzl_sphere,
)


def cube_mesh(half=0.5, center=(0, 0, 0)):
    c = np.asarray(center, dtype=float)
    v = np.array([[x, y, z] for x in (-half, half) for y in (-half, half) for z in (-half, half)]) + c
    f = np.array([
        [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
    ])
    return TriangleMesh(v, f)


def icosphere(radius=1.0, subdiv=2):
    t = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    for _ in range(subdiv):
        mids = {}
        verts = list(v)

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mids:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                mids[key] = len(verts)
                verts.append(m)
            return mids[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        v = np.array(verts)
        f = np.array(nf)
    return TriangleMesh(v * radius, f)


def l_prism():
    """L-shaped cross-section extruded in z: concave at the inner corner."""
    profile = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    v = np.concatenate([np.column_stack([profile, np.zeros(6)]),
                        np.column_stack([profile, np.ones(6)])])
    faces = []
    for i in range(6):
        j = (i + 1) % 6
        faces += [[i, j, j + 6], [i, j + 6, i + 6]]
    faces += [[0, 1, 2], [0, 2, 3], [0, 3, 5], [3, 4, 5]]
    faces += [[6, 8, 7], [6, 9, 8], [6, 11, 9], [9, 11, 10]]
    return TriangleMesh(v, np.array(faces))


def test_axis_aligned_cube_box_half_extents():
    box = pca_box(cube_mesh().vertices)
    np.testing.assert_allclose(np.sort(box.half_extents), [0.5, 0.5, 0.5], atol=1e-6)
    np.testing.assert_allclose(box.center, 0.0, atol=1e-9)


def test_rotated_box_recovered():
    # distinct extents so the corner covariance has distinct eigenvalues
    ang = 0.7
    R = np.array([[np.cos(ang), -np.sin(ang), 0], [np.sin(ang), np.cos(ang), 0], [0, 0, 1]])
    half = np.array([0.2, 0.35, 0.6])
    corners = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]) * half
    box = pca_box(corners @ R.T + [1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.sort(box.half_extents), np.sort(half), atol=1e-9)
    np.testing.assert_allclose(box.center, [1.0, 2.0, 3.0], atol=1e-9)


def test_welzl_unit_sphere_mesh():
    mesh = icosphere(radius=1.0)
    s = welzl_sphere(mesh.vertices)
    assert abs(s.radius - 1.0) < 1e-6
    np.testing.assert_allclose(s.center, 0.0, atol=1e-9)


def test_welzl_is_minimal_on_random_clouds():
    rng = np.random.default_rng(3)
    for trial in range(5):
        pts = rng.normal(size=(40, 3))
        s = welzl_sphere(pts, seed=trial)
        d = np.linalg.norm(pts - s.center, axis=1)
        assert d.max() <= s.radius + 1e-9
        # boundary support: at least 2 points on the sphere
        assert (d > s.radius - 1e-6).sum() >= 2


def test_l_prism_decomposes_with_containment():
    mesh = l_prism()
    col, exceeded = convex_decomposition(mesh, DecompositionConfig(concavity_eps=0.05))
    assert not exceeded
    assert len(col.pieces) >= 2
    pts = np.unique(mesh.vertices, axis=0)
    inside = np.zeros(len(pts), dtype=bool)
    for p in col.pieces:
        inside |= p.contains(pts, tol=1e-6)
    assert inside.all()


def test_convex_pieces_are_convex():
    col, _ = convex_decomposition(l_prism())
    for p in col.pieces:
        assert p.contains(p.vertices, tol=1e-6).all()


def test_trimesh_simplification_hits_budget():
    mesh = icosphere(radius=1.0, subdiv=2)
    tm = simplify_trimesh(mesh, max_faces=80)
    assert tm.mesh.n_faces <= 80
    r = np.linalg.norm(tm.mesh.vertices, axis=1)
    assert r.max() <= 1.01  # collapse stays on or inside the sphere


def test_make_collider_dispatch_and_empty_error():
    import pytest

    mesh = cube_mesh()
    assert make_collider(mesh, "box").kind == "box"
    assert make_collider(mesh, "sphere").kind == "sphere"
    assert make_collider(mesh, "convex").kind == "convex"
    assert make_collider(mesh, "trimesh", max_faces=100).kind == "trimesh"
    with pytest.raises(ValueError):
        make_collider(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int64)), "box")


def test_inertia_matches_closed_forms():
    from gamebake.phys import BoxCollider, SphereCollider

    s = SphereCollider(center=np.zeros(3), radius=0.5)
    np.testing.assert_allclose(inertia_tensor(s, 2.0), np.eye(3) * (0.4 * 2.0 * 0.25), rtol=1e-12)
    b = BoxCollider(half_extents=np.array([0.5, 1.0, 1.5]))
    expect = np.diag([2**2 + 3**2, 1 + 3**2, 1 + 2**2]) * (3.0 / 12.0)
    np.testing.assert_allclose(inertia_tensor(b, 3.0), expect, rtol=1e-12)


def test_convex_cube_inertia_close_to_box():
    col, _ = convex_decomposition(cube_mesh())
    got = inertia_tensor(col, mass=2.0)
    expect = np.eye(3) * (2.0 / 12.0 * (1 + 1))
    np.testing.assert_allclose(got, expect, rtol=1e-6, atol=1e-9)
