import numpy as np

from gamebake.core import FeatureGrid, Tensor
from gamebake.core.gradcheck import gradcheck


def straight_line_encode(grid, x):
    """Independent re-statement of the hash + trilinear formula, scalar loops only."""
    L = grid.levels
    F = grid.features_per_level
    mask = (1 << grid.log2_table_size) - 1
    tables = grid.tables.data
    out = np.zeros((x.shape[0], L * F))
    for n in range(x.shape[0]):
        u = (x[n] + 2.0) / 4.0
        for lv in range(L):
            res = float(grid.resolutions[lv])
            p = u * res
            c = np.clip(np.floor(p), 0, res - 1).astype(np.int64)
            f = p - c
            acc = np.zeros(F)
            for ox in (0, 1):
                for oy in (0, 1):
                    for oz in (0, 1):
                        idx = ((c[0] + ox) * 1 ^ (c[1] + oy) * 2654435761 ^ (c[2] + oz) * 805459861) & mask
                        w = (f[0] if ox else 1 - f[0]) * (f[1] if oy else 1 - f[1]) * (f[2] if oz else 1 - f[2])
                        acc = acc + w * tables[lv, idx]
            out[n, lv * F : (lv + 1) * F] = acc
    return out


def test_matches_independent_reimplementation():
    grid = FeatureGrid(levels=4, features_per_level=2, log2_table_size=10, rng=np.random.default_rng(42))
    rng = np.random.default_rng(1)
    x = rng.uniform(-2.0, 2.0, size=(17, 3))
    got = grid.encode(x).data
    np.testing.assert_allclose(got, straight_line_encode(grid, x), rtol=0, atol=1e-14)


def test_lattice_vertex_returns_corner_feature_bit_exact():
    grid = FeatureGrid(levels=1, features_per_level=3, log2_table_size=8, base_resolution=16,
                       rng=np.random.default_rng(3))
    # vertex k of a res-16 lattice over [0,1]: x01 = k/16, i.e. x = 4*k/16 - 2
    k = np.array([5, 9, 13])
    x = (4.0 * k / 16.0 - 2.0)[None, :]
    idx = (k[0] * 1 ^ k[1] * 2654435761 ^ k[2] * 805459861) & 255
    got = grid.encode(x).data[0]
    assert np.array_equal(got, grid.tables.data[0, idx])


def test_cell_center_is_mean_of_eight_corners():
    grid = FeatureGrid(levels=1, features_per_level=2, log2_table_size=9, base_resolution=16,
                       rng=np.random.default_rng(8))
    k = np.array([3, 7, 11])
    x = (4.0 * (k + 0.5) / 16.0 - 2.0)[None, :]
    corners = []
    for ox in (0, 1):
        for oy in (0, 1):
            for oz in (0, 1):
                idx = ((k[0] + ox) * 1 ^ (k[1] + oy) * 2654435761 ^ (k[2] + oz) * 805459861) & 511
                corners.append(grid.tables.data[0, idx])
    np.testing.assert_allclose(grid.encode(x).data[0], np.mean(corners, axis=0), rtol=1e-14)


def test_same_input_twice_is_bit_identical():
    grid = FeatureGrid(rng=np.random.default_rng(0))
    x = np.random.default_rng(2).uniform(-1.9, 1.9, size=(64, 3))
    assert np.array_equal(grid.encode(x).data, grid.encode(x).data)


def test_out_of_domain_clamped_with_warning():
    grid = FeatureGrid(levels=2, log2_table_size=8, rng=np.random.default_rng(0))
    inside = grid.encode(np.array([[2.0, 0.0, 0.0]])).data
    assert grid.clamp_warnings == 0
    outside = grid.encode(np.array([[2.5, 0.0, 0.0]])).data
    assert grid.clamp_warnings == 1
    np.testing.assert_array_equal(inside, outside)


def test_table_gradients_match_central_differences():
    grid = FeatureGrid(levels=3, features_per_level=2, log2_table_size=6, base_resolution=4,
                       per_level_scale=1.4, rng=np.random.default_rng(12), init_scale=0.5)
    x = np.random.default_rng(4).uniform(-1.5, 1.5, size=(5, 3))

    def loss():
        e = grid.encode(x)
        return (e * e).sum() + e.mean()

    assert gradcheck(loss, grid.params(), h=1e-5) < 1e-6


def test_input_gradients_match_central_differences():
    grid = FeatureGrid(levels=3, features_per_level=2, log2_table_size=10, base_resolution=4,
                       per_level_scale=1.3, rng=np.random.default_rng(5), init_scale=0.5)
    # keep probes away from cell boundaries so the stencil stays in one cell
    x = Tensor(np.array([[0.3131, -0.7177, 0.9213], [1.2171, 0.1113, -0.4317]]), requires_grad=True)

    def loss():
        e = grid.encode(x)
        return (e * e).sum()

    assert gradcheck(loss, [x], h=1e-6) < 1e-5
