import numpy as np
import pytest

from gamebake.core import Tensor
from gamebake.core.gradcheck import gradcheck
from gamebake.field import RenderSettings, composite, render_rays, sample_along_ray
from gamebake.field.analytic import AnalyticField
from gamebake.field.model import FieldConfig, RadianceField


# -- stratified sampling -------------------------------------------------------


def test_single_sample_midpoint_without_jitter():
    np.testing.assert_allclose(sample_along_ray(1.0, 3.0, 1), [2.0])


def test_same_seed_identical():
    a = sample_along_ray(0.5, 6.0, 32, np.random.default_rng(9), n_rays=4)
    b = sample_along_ray(0.5, 6.0, 32, np.random.default_rng(9), n_rays=4)
    assert np.array_equal(a, b)


def test_exactly_one_sample_per_bin():
    t = sample_along_ray(2.0, 10.0, 16, np.random.default_rng(3))
    bins = np.floor((t - 2.0) / ((10.0 - 2.0) / 16)).astype(int)
    assert np.array_equal(bins, np.arange(16))
    assert (np.diff(t) > 0).all()


# -- compositing -----------------------------------------------------------------


def brute_force_composite(sigma, t, far, attr):
    """Scalar front-to-back reference loop."""
    R, S = sigma.shape
    C = attr.shape[-1]
    out_attr = np.zeros((R, C))
    out_depth = np.zeros(R)
    out_op = np.zeros(R)
    weights = np.zeros((R, S))
    for r in range(R):
        T = 1.0
        for i in range(S):
            delta = (t[r, i + 1] - t[r, i]) if i < S - 1 else far - t[r, -1]
            e = np.exp(-sigma[r, i] * delta)
            w = T * (1.0 - e)
            weights[r, i] = w
            for c in range(C):
                out_attr[r, c] = out_attr[r, c] + w * attr[r, i, c]
            out_depth[r] = out_depth[r] + w * t[r, i]
            out_op[r] = out_op[r] + w
            T = T * e
    return out_attr, out_depth, out_op, weights


def test_composite_matches_brute_force_bitwise():
    rng = np.random.default_rng(21)
    R, S = 7, 23
    t = np.sort(rng.uniform(0.5, 5.5, size=(R, S)), axis=1)
    sigma = rng.uniform(0.0, 4.0, size=(R, S))
    attr = rng.uniform(size=(R, S, 3))
    comp = composite(Tensor(sigma), t, 6.0, {"rgb": Tensor(attr)})
    ref_attr, ref_depth, ref_op, ref_w = brute_force_composite(sigma, t, 6.0, attr)
    assert np.array_equal(comp["rgb"].data, ref_attr)
    assert np.array_equal(comp["depth"].data, ref_depth)
    assert np.array_equal(comp["opacity"].data, ref_op)
    assert np.array_equal(comp["weights"], ref_w)


def test_saturated_single_sample():
    t = np.array([[1.0]])
    comp = composite(Tensor([[20.0]]), t, 2.0, {"rgb": Tensor([[[0.2, 0.4, 0.6]]])})
    assert abs(comp["opacity"].data[0] - 1.0) < 1e-8
    np.testing.assert_allclose(comp["rgb"].data[0], [0.2, 0.4, 0.6], atol=1e-8)


def test_zero_density_gives_zero_everything():
    t = np.tile(np.linspace(1, 2, 8), (3, 1))
    comp = composite(Tensor(np.zeros((3, 8))), t, 2.5, {"rgb": Tensor(np.random.default_rng(0).uniform(size=(3, 8, 3)))})
    assert np.array_equal(comp["opacity"].data, np.zeros(3))
    assert np.array_equal(comp["rgb"].data, np.zeros((3, 3)))


def test_two_sample_hand_formula():
    t = np.array([[0.5, 1.0]])
    sigma = np.array([[1.0, 2.0]])
    c = np.array([[[1.0, 0.0, 0.5], [0.0, 1.0, 0.25]]])
    comp = composite(Tensor(sigma), t, 1.5, {"rgb": Tensor(c)})
    a1 = 1 - np.exp(-0.5)
    a2 = 1 - np.exp(-1.0)
    w1, w2 = a1, np.exp(-0.5) * a2
    np.testing.assert_allclose(comp["rgb"].data[0], w1 * c[0, 0] + w2 * c[0, 1], rtol=1e-15)


def test_weights_sum_below_one():
    rng = np.random.default_rng(5)
    for _ in range(20):
        S = rng.integers(1, 30)
        t = np.sort(rng.uniform(0.1, 9.0, size=(4, S)), axis=1)
        sigma = rng.uniform(0, 50, size=(4, S))
        comp = composite(Tensor(sigma), t, 10.0, {})
        assert (comp["weights"].sum(axis=1) <= 1.0 + 1e-12).all()


def test_composite_gradients_match_central_differences():
    rng = np.random.default_rng(13)
    R, S = 3, 6
    t = np.sort(rng.uniform(0.5, 3.5, size=(R, S)), axis=1)
    sigma = Tensor(rng.uniform(0.1, 2.0, size=(R, S)), requires_grad=True)
    attr = Tensor(rng.uniform(size=(R, S, 2)), requires_grad=True)
    target = rng.uniform(size=(R, 2))

    def loss():
        comp = composite(sigma, t, 4.0, {"a": attr})
        d = comp["a"] - target
        return (d * d).sum() + comp["depth"].sum() * 0.3 + comp["opacity"].mean()

    assert gradcheck(loss, [sigma, attr]) < 1e-6


def test_decreasing_t_rejected():
    with pytest.raises(ValueError):
        composite(Tensor(np.ones((1, 2))), np.array([[2.0, 1.0]]), 3.0, {})


# -- full ray rendering ------------------------------------------------------------


def test_render_rays_sphere_depth():
    geom_density = AnalyticField(
        density_fn=lambda x: np.where(np.linalg.norm(x, axis=1) < 0.4, 1e4, 0.0)
    )
    origins = np.array([[0.0, -2.0, 0.0]])
    dirs = np.array([[0.0, 1.0, 0.0]])
    st = RenderSettings(near=0.5, far=4.0, n_samples=256)
    res = render_rays(geom_density, origins, dirs, st)
    assert res.opacity.data[0] > 0.999
    bin_w = (st.far - st.near) / st.n_samples
    assert abs(res.depth.data[0] - 1.6) < 2 * bin_w


def test_field_query_ranges():
    f = RadianceField(FieldConfig.tiny(), seed=1)
    rng = np.random.default_rng(2)
    x = rng.uniform(-1.5, 1.5, size=(40, 3))
    d = rng.normal(size=(40, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    sigma, color, sem, nrm = f.query(x, d)
    assert (sigma.data >= 0).all()
    assert ((color.data >= 0) & (color.data <= 1)).all()
    np.testing.assert_allclose(sem.data.sum(axis=1), 1.0, atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(nrm.data, axis=1), 1.0, atol=1e-9)


def test_query_rejects_unnormalized_directions():
    f = RadianceField(FieldConfig.tiny())
    with pytest.raises(ValueError):
        f.query(np.zeros((1, 3)), np.array([[0.0, 0.0, 2.0]]))


# -- density normals -------------------------------------------------------------------


def test_density_normal_linear_field():
    f = AnalyticField(density_fn=lambda x: x[:, 2], density_tape_fn=lambda xt: xt[:, 2])
    n, degen = f.density_normal(np.array([[0.3, 0.1, 2.0]]))
    assert not degen[0]
    np.testing.assert_allclose(n[0], [0.0, 0.0, -1.0], atol=1e-12)


def test_density_normal_radial_peak_points_outward():
    def tape_fn(xt):
        return ((xt * xt).sum(axis=1) * -1.0).exp()

    f = AnalyticField(density_fn=lambda x: np.exp(-(x**2).sum(1)), density_tape_fn=tape_fn)
    pts = np.array([[0.5, 0.0, 0.0], [0.0, -0.7, 0.3]])
    n, degen = f.density_normal(pts)
    assert not degen.any()
    expect = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    np.testing.assert_allclose(n, expect, atol=1e-10)


def test_density_normal_constant_field_degenerate():
    f = AnalyticField(density_fn=lambda x: np.ones(x.shape[0]),
                      density_tape_fn=lambda xt: xt.sum() * 0.0 + 1.0)
    n, degen = f.density_normal(np.array([[0.1, 0.2, 0.3]]))
    assert degen[0]
    np.testing.assert_array_equal(n[0], [0.0, 0.0, 1.0])


def test_radiance_field_density_normal_matches_fd():
    f = RadianceField(FieldConfig.tiny(), seed=3)
    pts = np.random.default_rng(4).uniform(-0.9, 0.9, size=(6, 3))
    exact, degen = f.density_normal(pts)
    fd = f.density_normal_fd(pts, h=1e-5).data
    keep = ~degen
    np.testing.assert_allclose(exact[keep], fd[keep], atol=1e-4)
