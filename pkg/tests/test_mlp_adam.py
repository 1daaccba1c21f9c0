import numpy as np
import pytest

from gamebake.core import Adam, NanGradientError, Tensor, TinyMlp
from gamebake.core.gradcheck import gradcheck


def test_zero_weights_yield_bias():
    mlp = TinyMlp([3, 4, 2], rng=np.random.default_rng(0))
    for w in mlp.weights:
        w.data[:] = 0.0
    mlp.biases[-1].data[:] = [0.7, -0.3]
    out = mlp(np.zeros((1, 3)))
    np.testing.assert_allclose(out.data[0], [0.7, -0.3])


def test_one_by_one_network_hand_product():
    mlp = TinyMlp([1, 1], rng=np.random.default_rng(0))
    mlp.weights[0].data[:] = 2.0
    mlp.biases[0].data[:] = 1.0
    assert mlp(np.array([[3.0]])).data[0, 0] == 7.0


def test_negative_preactivation_blocked_by_relu():
    mlp = TinyMlp([1, 1, 1], rng=np.random.default_rng(0))
    mlp.weights[0].data[:] = -5.0  # hidden pre-activation negative for positive input
    mlp.weights[1].data[:] = 3.0
    mlp.biases[0].data[:] = 0.0
    mlp.biases[1].data[:] = 0.25
    assert mlp(np.array([[2.0]])).data[0, 0] == 0.25


def test_parameter_count():
    mlp = TinyMlp([5, 16, 3])
    assert mlp.parameter_count == 5 * 16 + 16 + 16 * 3 + 3


def test_dimension_mismatch_rejected():
    mlp = TinyMlp([4, 2])
    with pytest.raises(ValueError):
        mlp(np.zeros((1, 3)))


@pytest.mark.parametrize("act", ["none", "softplus", "sigmoid", "softmax"])
def test_output_activation_ranges_and_gradients(act):
    mlp = TinyMlp([3, 8, 4], output_activation=act, rng=np.random.default_rng(1))
    x = np.random.default_rng(2).normal(size=(6, 3))
    out = mlp(x).data
    if act == "softplus":
        assert (out >= 0).all()
    elif act == "sigmoid":
        assert ((out >= 0) & (out <= 1)).all()
    elif act == "softmax":
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)

    target = np.random.default_rng(3).uniform(size=(6, 4))

    def loss():
        d = mlp(x) - target
        return (d * d).mean()

    assert gradcheck(loss, mlp.params()) < 1e-5


def test_adam_zero_gradient_keeps_params():
    p = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    opt = Adam([p], lr=0.1)
    opt.step([np.zeros(2)])
    np.testing.assert_array_equal(p.data, [1.0, 2.0])
    assert opt.step_count == 1


def test_adam_first_step_closed_form():
    for g in (3.0, -0.004):
        p = Tensor(np.array([1.0]), requires_grad=True)
        opt = Adam([p], lr=0.05, eps=1e-15)
        opt.step([np.array([g])])
        # m_hat = g, v_hat = g^2 at t=1
        expected = 1.0 - 0.05 * g / (abs(g) + 1e-15)
        np.testing.assert_allclose(p.data[0], expected, rtol=1e-12)


def test_adam_two_steps_match_hand_recurrence():
    g = np.array([0.5])
    lr, b1, b2, eps = 0.01, 0.9, 0.99, 1e-15
    p = Tensor(np.array([2.0]), requires_grad=True)
    opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps)
    opt.step([g])
    opt.step([g])

    # hand-rolled recurrence
    val, m, v = 2.0, 0.0, 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * g[0]
        v = b2 * v + (1 - b2) * g[0] ** 2
        val -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    np.testing.assert_allclose(p.data[0], val, rtol=1e-14)


def test_adam_rejects_nan_and_leaves_state():
    p = Tensor(np.array([1.0]), requires_grad=True)
    opt = Adam([p], lr=0.1)
    with pytest.raises(NanGradientError):
        opt.step([np.array([np.nan])])
    assert opt.step_count == 0
    np.testing.assert_array_equal(p.data, [1.0])


def test_training_is_deterministic_bitwise():
    def run():
        rng = np.random.default_rng(123)
        mlp = TinyMlp([2, 16, 1], rng=rng)
        opt = Adam(mlp.params(), lr=5e-3)
        x = rng.normal(size=(32, 2))
        y = (x[:, :1] * x[:, 1:]) * 0.5
        for _ in range(25):
            opt.zero_grad()
            d = mlp(x) - y
            (d * d).mean().backward()
            opt.step()
        return np.concatenate([p.data.ravel() for p in mlp.params()])

    assert np.array_equal(run(), run())
