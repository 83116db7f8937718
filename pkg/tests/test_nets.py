import numpy as np
import pytest

from motionrestore.errors import ShapeError, ValidationError
from motionrestore.nets import (
    AdamState,
    Gradients,
    Network,
    backward,
    forward,
    init_network,
    input_jacobian_penalty,
    load_checkpoint,
    opt_step,
    save_checkpoint,
)


def test_zero_weight_network_outputs_bias():
    net = Network(
        [np.zeros((3, 2)), np.zeros((2, 3))],
        [np.zeros(3), np.array([1.5, -0.5])],
        ["relu", "linear"],
    )
    out, _ = forward(net, np.array([0.3, -0.7]))
    assert np.allclose(out, [1.5, -0.5])


def test_single_linear_layer_hand_arithmetic():
    net = Network([np.array([[2.0]])], [np.array([1.0])], ["linear"])
    out, _ = forward(net, np.array([3.0]))
    assert np.allclose(out, [7.0])


def test_relu_clips_negative_preactivation():
    net = Network([np.array([[1.0]])], [np.array([0.0])], ["relu"])
    out, _ = forward(net, np.array([-2.0]))
    assert out[0] == 0.0


def test_forward_shape_and_finite_validation():
    net = init_network([3, 4, 2], np.random.default_rng(0))
    with pytest.raises(ShapeError):
        forward(net, np.zeros(5))
    with pytest.raises(ValidationError):
        forward(net, np.array([1.0, np.nan, 0.0]))


def test_backward_matches_central_finite_differences():
    rng = np.random.default_rng(1)
    for case in range(10):
        sizes = [rng.integers(2, 6) for _ in range(4)]
        net = init_network(list(map(int, sizes)), rng)
        x = rng.normal(size=(3, sizes[0]))
        target = rng.normal(size=(3, sizes[-1]))

        def loss_value(n):
            out, _ = forward(n, x)
            return 0.5 * float(np.sum((out - target) ** 2))

        out, cache = forward(net, x)
        grads, gx = backward(net, cache, out - target)
        h = 1e-5
        for li in range(len(net.weights)):
            w = net.weights[li]
            for _ in range(4):
                i, j = rng.integers(w.shape[0]), rng.integers(w.shape[1])
                pert = net.copy()
                pert.weights[li][i, j] += h
                up = loss_value(pert)
                pert.weights[li][i, j] -= 2 * h
                down = loss_value(pert)
                fd = (up - down) / (2 * h)
                assert grads.weights[li][i, j] == pytest.approx(fd, rel=1e-4, abs=1e-7)
            b = net.biases[li]
            i = rng.integers(b.shape[0])
            pert = net.copy()
            pert.biases[li][i] += h
            up = loss_value(pert)
            pert.biases[li][i] -= 2 * h
            down = loss_value(pert)
            assert grads.biases[li][i] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)
        # input gradient
        xp = x.copy()
        xp[1, 0] += h
        up = float(0.5 * np.sum((forward(net, xp)[0] - target) ** 2))
        xp[1, 0] -= 2 * h
        down = float(0.5 * np.sum((forward(net, xp)[0] - target) ** 2))
        assert gx[1, 0] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)


def test_backward_zero_grad_and_linearity():
    rng = np.random.default_rng(2)
    net = init_network([4, 8, 3], rng)
    x = rng.normal(size=(5, 4))
    out, cache = forward(net, x)
    zero, _ = backward(net, cache, np.zeros_like(out))
    assert all(np.allclose(w, 0) for w in zero.weights)
    gy = rng.normal(size=out.shape)
    g1, _ = backward(net, cache, gy)
    g2, _ = backward(net, cache, 2 * gy)
    for a, b in zip(g1.weights, g2.weights):
        assert np.allclose(2 * a, b)


def test_backward_rejects_stale_cache():
    rng = np.random.default_rng(3)
    net = init_network([4, 8, 3], rng)
    _, cache = forward(net, rng.normal(size=(5, 4)))
    with pytest.raises(ShapeError):
        backward(net, cache, np.zeros((5, 2)))


def test_input_jacobian_penalty_matches_finite_differences():
    rng = np.random.default_rng(4)
    net = init_network([5, 7, 6, 1], rng)
    x = rng.normal(size=(4, 5))

    def penalty_value(n):
        total = 0.0
        for row in x:
            _, cache = forward(n, row)
            _, gx = backward(n, cache, np.ones(1))
            total += float(np.sum(gx**2))
        return total / x.shape[0]

    pen, grads = input_jacobian_penalty(net, x)
    assert pen == pytest.approx(penalty_value(net), rel=1e-12)
    h = 1e-6
    for li in range(len(net.weights)):
        w = net.weights[li]
        for _ in range(4):
            i, j = rng.integers(w.shape[0]), rng.integers(w.shape[1])
            pert = net.copy()
            pert.weights[li][i, j] += h
            up = penalty_value(pert)
            pert.weights[li][i, j] -= 2 * h
            down = penalty_value(pert)
            fd = (up - down) / (2 * h)
            assert grads.weights[li][i, j] == pytest.approx(fd, rel=1e-3, abs=1e-6)


def test_opt_step_zero_gradient_keeps_params():
    rng = np.random.default_rng(5)
    net = init_network([2, 3, 1], rng)
    state = AdamState.for_network(net, lr=0.1)
    new, st2 = opt_step(net, Gradients.zeros_like(net), state)
    for a, b in zip(new.weights, net.weights):
        assert np.array_equal(a, b)
    assert st2.step == 1
    assert state.step == 0  # original untouched


def test_opt_step_quadratic_bowl_converges():
    # f(w) = w^2 from w=1 at lr 1e-2: |w| < 1e-3 within 2000 steps
    net = Network([np.array([[1.0]])], [np.array([0.0])], ["linear"])
    state = AdamState.for_network(net, lr=1e-2)
    for _ in range(2000):
        grads = Gradients([2.0 * net.weights[0]], [np.zeros(1)])
        net, state = opt_step(net, grads, state)
        if abs(net.weights[0][0, 0]) < 1e-3:
            break
    assert abs(net.weights[0][0, 0]) < 1e-3


def test_opt_step_rejects_non_finite():
    rng = np.random.default_rng(6)
    net = init_network([2, 2], rng)
    state = AdamState.for_network(net)
    bad = Gradients.zeros_like(net)
    bad.weights[0][0, 0] = np.nan
    before = net.weights[0].copy()
    with pytest.raises(ValidationError):
        opt_step(net, bad, state)
    assert np.array_equal(net.weights[0], before)


def test_deterministic_training_trajectory():
    def run():
        rng = np.random.default_rng(7)
        net = init_network([3, 5, 2], rng)
        state = AdamState.for_network(net, lr=1e-3)
        x = rng.normal(size=(8, 3))
        y = rng.normal(size=(8, 2))
        for _ in range(20):
            out, cache = forward(net, x)
            grads, _ = backward(net, cache, out - y)
            net, state = opt_step(net, grads, state)
        return net

    a, b = run(), run()
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    net = init_network([4, 6, 2], rng)
    state = AdamState.for_network(net, lr=3e-4)
    out, cache = forward(net, rng.normal(size=(2, 4)))
    grads, _ = backward(net, cache, out)
    net, state = opt_step(net, grads, state)
    extra = {"log_std": rng.normal(size=2)}
    path = tmp_path / "ck.npz"
    save_checkpoint(path, net, state, extra, meta={"kind": "test"})
    net2, state2, extra2, meta = load_checkpoint(path)
    for a, b in zip(net.weights, net2.weights):
        assert np.array_equal(a, b)
    assert state2 is not None and state2.step == 1 and state2.lr == 3e-4
    assert np.array_equal(extra2["log_std"], extra["log_std"])
    assert meta == {"kind": "test"}
    out1, _ = forward(net, np.ones(4))
    out2, _ = forward(net2, np.ones(4))
    assert np.array_equal(out1, out2)
