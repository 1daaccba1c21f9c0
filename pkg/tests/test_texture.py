import numpy as np

from gamebake.bake import NeuralTexture, TriangleMesh, make_shader, rasterize_mesh, shade
from gamebake.bake.unwrap import UnwrapConfig, uv_unwrap
from gamebake.core import Tensor, concat
from gamebake.core.gradcheck import gradcheck
from gamebake.scene import CameraModel


def frontal_camera(w=24, h=24, f=22.0):
    return CameraModel(f, f, w / 2, h / 2, w, h, np.eye(3), np.array([0.0, 0.0, -2.0]))


def unwrapped_quad():
    mesh = TriangleMesh(
        np.array([[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]]),
        np.array([[0, 1, 2], [0, 2, 3]]),
    )
    out, res = uv_unwrap(mesh, UnwrapConfig(atlas_resolution=64))
    return out, res


def test_zero_shader_weights_shade_equals_base():
    mesh, res = unwrapped_quad()
    tex = NeuralTexture(res)
    tex.data.data[..., :3] = [0.2, 0.5, 0.7]
    tex.valid[:] = True
    shader = make_shader()
    for w in shader.weights:
        w.data[:] = 0.0
    for b in shader.biases:
        b.data[:] = 0.0
    cam = frontal_camera()
    # the zeroed shader adds exactly nothing ...
    probe = np.concatenate([np.array([0.3, -0.2, 0.9]), np.array([0.0, 0.0, 1.0])])[None]
    np.testing.assert_array_equal(shader(probe).data, np.zeros((1, 3)))
    # ... so the image is the bilinearly blended base color (equal texels: 1 ulp)
    img = shade(rasterize_mesh(mesh, cam), tex, shader, cam)
    gb = rasterize_mesh(mesh, cam)
    np.testing.assert_allclose(img[gb.mask], np.tile([0.2, 0.5, 0.7], (gb.mask.sum(), 1)),
                               rtol=0, atol=3e-16)


def test_output_clamped_to_unit_range():
    mesh, res = unwrapped_quad()
    tex = NeuralTexture(res)
    tex.data.data[..., :3] = 0.9
    tex.data.data[..., 3:] = 5.0
    tex.valid[:] = True
    shader = make_shader(np.random.default_rng(3))
    for w in shader.weights:
        w.data *= 10.0
    cam = frontal_camera()
    img = shade(rasterize_mesh(mesh, cam), tex, shader, cam)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_single_texel_hand_evaluated_mlp():
    # 1-texel texture, 1x1-equivalent shader evaluation by hand
    tex = NeuralTexture(2)
    tex.data.data[..., :3] = [0.1, 0.2, 0.3]
    tex.data.data[..., 3:] = [0.4, -0.2, 0.6]
    tex.valid[:] = True
    shader = make_shader(hidden=2)
    shader.weights[0].data[:] = 0.0
    shader.weights[0].data[0, 0] = 1.0  # h0 = relu(S_x)
    shader.weights[0].data[3, 1] = 2.0  # h1 = relu(2 d_x)
    shader.biases[0].data[:] = [0.1, -0.1]
    shader.weights[1].data[:] = [[1.0, 0.0, 0.5], [0.0, 1.0, 0.25]]
    shader.biases[1].data[:] = [0.01, 0.02, 0.03]
    S = np.array([0.4, -0.2, 0.6])
    d = np.array([0.3, 0.0, 0.95393920141694566])
    h0 = max(S[0] + 0.1, 0.0)
    h1 = max(2 * d[0] - 0.1, 0.0)
    expect = np.array([0.01 + h0, 0.02 + h1, 0.03 + 0.5 * h0 + 0.25 * h1])
    got = shader(np.concatenate([S, d])[None]).data[0]
    np.testing.assert_allclose(got, expect, rtol=1e-12)


def test_bilinear_sample_matches_hand_interp_and_gradchecks():
    tex = NeuralTexture(4)
    rng = np.random.default_rng(2)
    tex.data.data[:] = rng.uniform(size=(4, 4, 6))
    tex.data.requires_grad = True
    uv = np.array([[0.5, 0.5], [0.13, 0.77]])
    out = tex.sample(uv)
    # uv (0.5, 0.5) on a 4x4 atlas lands exactly between texels (1,1),(2,1),(1,2),(2,2)
    expect = 0.25 * (tex.data.data[1, 1] + tex.data.data[1, 2]
                     + tex.data.data[2, 1] + tex.data.data[2, 2])
    np.testing.assert_allclose(out.data[0], expect, rtol=1e-12)

    target = rng.uniform(size=(2, 6))

    def loss():
        d = tex.sample(uv) - target
        return (d * d).sum()

    assert gradcheck(loss, [tex.data]) < 1e-6


def test_unsampled_texels_get_zero_gradient():
    tex = NeuralTexture(8)
    tex.data.requires_grad = True
    uv = np.array([[0.2, 0.2]])
    loss = (tex.sample(uv) ** 2).sum()
    loss.backward()
    g = tex.data.grad
    touched = np.abs(g).sum(axis=-1) > 0
    assert touched.sum() == 4  # exactly the bilinear footprint
    assert touched[:4, :4].sum() == 4


def test_shader_gradient_through_sample_and_mlp():
    tex = NeuralTexture(8)
    rng = np.random.default_rng(5)
    tex.data.data[:] = rng.uniform(-0.5, 0.5, size=(8, 8, 6))
    tex.data.requires_grad = True
    shader = make_shader(np.random.default_rng(1), hidden=4)
    uv = rng.uniform(0.1, 0.9, size=(5, 2))
    dirs = rng.normal(size=(5, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    gt = rng.uniform(size=(5, 3))

    def loss():
        ts = tex.sample(uv)
        color = ts[:, :3] + shader(concat([ts[:, 3:], Tensor(dirs)], axis=1))
        d = color - gt
        return (d * d).sum(axis=-1).mean()

    assert gradcheck(loss, [tex.data] + shader.params()) < 1e-5


def test_dilation_fills_from_nearest_valid():
    tex = NeuralTexture(6)
    tex.data.data[2, 2] = [1, 2, 3, 4, 5, 6]
    tex.valid[2, 2] = True
    tex.dilate()
    assert tex.valid.all()
    np.testing.assert_array_equal(tex.data.data[5, 5], [1, 2, 3, 4, 5, 6])


def test_invalid_touch_counter():
    mesh, res = unwrapped_quad()
    tex = NeuralTexture(res)  # all texels invalid
    shader = make_shader()
    cam = frontal_camera()
    shade(rasterize_mesh(mesh, cam), tex, shader, cam)
    assert tex.invalid_touches > 0
