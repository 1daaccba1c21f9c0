"""Native Cython kernels against the pure-numpy fallback, bit for bit."""

import numpy as np
import pytest

from gamebake.core.kernels import BACKEND, fallback

native = pytest.importorskip("gamebake.core.kernels._native",
                             reason="compiled kernels unavailable")


def grid_case(seed, n=257):
    rng = np.random.default_rng(seed)
    L, T, F = 5, 1 << 10, 3
    tables = rng.normal(size=(L, T, F))
    x01 = rng.uniform(0.0, 1.0, size=(n, 3))
    res = np.array([int(16 * 1.5**i) for i in range(L)], dtype=np.int64)
    return tables, x01, res


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_encode_forward_bit_identical(seed):
    tables, x01, res = grid_case(seed)
    a = native.encode_forward(tables, x01, res)
    b = fallback.encode_forward(tables, x01, res)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("need_x", [False, True])
def test_encode_backward_bit_identical(need_x):
    tables, x01, res = grid_case(7)
    g = np.random.default_rng(8).normal(size=(x01.shape[0], tables.shape[0] * tables.shape[2]))
    gt_a, gx_a = native.encode_backward(tables, x01, res, g, need_x)
    gt_b, gx_b = fallback.encode_backward(tables, x01, res, g, need_x)
    assert np.array_equal(gt_a, gt_b)
    if need_x:
        assert np.array_equal(gx_a, gx_b)
    else:
        assert gx_a is None and gx_b is None


def raster_case(seed):
    rng = np.random.default_rng(seed)
    verts = rng.uniform(-1, 1, size=(60, 3))
    verts[:, 2] = rng.uniform(1.0, 4.0, size=60)
    faces = rng.integers(0, 60, size=(40, 3)).astype(np.int64)
    return verts, faces


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_rasterize_bit_identical(seed):
    verts, faces = raster_case(seed)
    a = native.rasterize(verts, faces, 40.0, 40.0, 24.0, 18.0, 48, 36)
    b = fallback.rasterize(verts, faces, 40.0, 40.0, 24.0, 18.0, 48, 36)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_selected_backend_reported():
    assert BACKEND in ("native", "fallback")
