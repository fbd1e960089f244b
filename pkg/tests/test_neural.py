import copy

import numpy as np
import pytest
from scipy.special import expit

from gpstream.errors import DomainError, NonFiniteLossError
from gpstream.neural import (
    MLPParams,
    NAMParams,
    TrainConfig,
    bce_gradients,
    bce_loss,
    init_mlp,
    init_nam,
    mlp_forward,
    nam_feature_variances,
    nam_forward,
    train,
    variance_estimate,
)


def naive_mlp_forward(params, x):
    """Per-neuron loop reimplementation (oracle)."""
    a = list(x)
    n_layers = len(params.weights)
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        out = []
        for o in range(w.shape[1]):
            s = b[o]
            for i in range(w.shape[0]):
                s += a[i] * w[i, o]
            if layer < n_layers - 1:
                s = max(s, 0.0)
            out.append(s)
        a = out
    return a[0]


def perturb(params_list, rng):
    for arr in params_list:
        arr += rng.normal(scale=0.3, size=arr.shape)


def flatten_model(model):
    if isinstance(model, NAMParams):
        arrays = []
        for s in model.subnets:
            arrays.extend(s.weights)
            arrays.extend(s.biases)
        return arrays
    return model.weights + model.biases


def test_zero_mlp_outputs_half():
    params = MLPParams(
        weights=[np.zeros((3, 4)), np.zeros((4, 1))],
        biases=[np.zeros(4), np.zeros(1)],
    )
    prob, logit = mlp_forward(params, np.array([1.0, -2.0, 0.5]))
    assert logit == 0.0
    assert prob == 0.5


def test_single_linear_layer_hand_value():
    params = MLPParams(weights=[np.array([[1.0], [1.0]])], biases=[np.zeros(1)])
    prob, logit = mlp_forward(params, np.array([2.0, 3.0]))
    assert logit == 5.0
    assert np.isclose(prob, expit(5.0))


def test_mlp_forward_matches_naive_loop(rng):
    params = init_mlp([3, 5, 4, 1], rng)
    perturb(params.biases, rng)
    for _ in range(10):
        x = rng.normal(size=3)
        _, logit = mlp_forward(params, x)
        assert np.isclose(logit, naive_mlp_forward(params, x), rtol=1e-12, atol=1e-12)


def test_zero_nam_outputs_half():
    params = init_nam(3, np.random.default_rng(0), hidden=(4,))
    for s in params.subnets:
        for w in s.weights:
            w[:] = 0.0
    prob, contrib = nam_forward(params, np.array([0.4, -0.1, 2.0]))
    assert prob == 0.5
    assert np.allclose(contrib, 0.0)


def test_nam_cancellation():
    sub_plus = MLPParams(weights=[np.zeros((1, 1))], biases=[np.array([1.0])])
    sub_minus = MLPParams(weights=[np.zeros((1, 1))], biases=[np.array([-1.0])])
    params = NAMParams(subnets=[sub_plus, sub_minus], intercept=0.0)
    prob, contrib = nam_forward(params, np.array([3.3, -7.0]))
    assert np.allclose(contrib, [1.0, -1.0])
    assert prob == 0.5


def test_nam_logit_is_sum_of_contributions(rng):
    params = init_nam(4, rng, hidden=(5, 3))
    for s in params.subnets:
        perturb(s.biases, rng)
    params.intercept = 0.37
    for _ in range(8):
        x = rng.normal(size=4)
        prob, contrib = nam_forward(params, x)
        logit = params.intercept + contrib.sum()
        assert np.isclose(expit(logit), prob, rtol=1e-12)


def test_train_zero_learning_rate_is_noop(rng):
    X = rng.normal(size=(20, 2))
    y = (rng.random(20) < 0.5).astype(float)
    params = init_mlp([2, 4, 1], rng)
    out = train(params, (X, y), TrainConfig(learning_rate=0.0, epochs=3, seed=1))
    for a, b in zip(flatten_model(params), flatten_model(out)):
        assert np.array_equal(a, b)


def test_train_separable_data_to_perfect_accuracy():
    gen = np.random.default_rng(2)
    X = np.concatenate([gen.uniform(-2, -0.5, 40), gen.uniform(0.5, 2, 40)])[:, None]
    y = np.concatenate([np.zeros(40), np.ones(40)])
    params = init_mlp([1, 8, 1], gen)
    out = train(params, (X, y), TrainConfig(epochs=500, seed=3))
    preds = np.array([mlp_forward(out, x)[0] for x in X]) >= 0.5
    assert np.mean(preds == (y == 1)) == 1.0


def test_training_reduces_loss(rng):
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(float)
    params = init_mlp([3, 8, 1], rng)
    out = train(params, (X, y), TrainConfig(epochs=50, seed=5))
    assert bce_loss(out, X, y) <= bce_loss(params, X, y)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_loss_raises(rng):
    X = rng.normal(size=(16, 2)) * 10
    y = (rng.random(16) < 0.5).astype(float)
    params = init_mlp([2, 6, 1], rng)
    with pytest.raises(NonFiniteLossError):
        train(params, (X, y), TrainConfig(learning_rate=1e154, epochs=5, seed=0))


def fd_gradient(model, X, y, eps=1e-5):
    grads = []
    for arr in flatten_model(model):
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = bce_loss(model, X, y)
            flat[i] = old - eps
            dn = bce_loss(model, X, y)
            flat[i] = old
            gflat[i] = (up - dn) / (2 * eps)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(f), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


def test_mlp_gradient_check(rng):
    X = rng.normal(size=(3, 2))
    y = np.array([1.0, 0.0, 1.0])
    params = init_mlp([2, 5, 4, 1], rng)
    perturb(params.biases, rng)
    _, g = bce_gradients(params, X, y)
    numeric = fd_gradient(params, X, y)
    assert max_rel_error(flatten_model(g), numeric) <= 1e-4


def test_nam_gradient_check(rng):
    X = rng.normal(size=(3, 2))
    y = np.array([0.0, 1.0, 1.0])
    params = init_nam(2, rng, hidden=(4, 3))
    for s in params.subnets:
        perturb(s.biases, rng)
    params.intercept = 0.21
    _, g = bce_gradients(params, X, y)
    numeric = fd_gradient(params, X, y)
    assert max_rel_error(flatten_model(g), numeric) <= 1e-4
    # intercept entry separately
    eps = 1e-5
    params.intercept += eps
    up = bce_loss(params, X, y)
    params.intercept -= 2 * eps
    dn = bce_loss(params, X, y)
    params.intercept += eps
    fd = (up - dn) / (2 * eps)
    assert abs(g.intercept - fd) / max(abs(fd), 1e-6) <= 1e-4


def test_training_is_bit_reproducible(rng):
    X = rng.normal(size=(40, 3))
    y = (rng.random(40) < 0.5).astype(float)
    params = init_nam(3, np.random.default_rng(7), hidden=(4,))
    cfg = TrainConfig(epochs=5, seed=11)
    out1 = train(copy.deepcopy(params), (X, y), cfg)
    out2 = train(copy.deepcopy(params), (X, y), cfg)
    for a, b in zip(flatten_model(out1), flatten_model(out2)):
        assert np.array_equal(a, b)
    assert out1.intercept == out2.intercept


def test_subnet_shift_cancels_against_intercept(rng):
    params = init_nam(3, rng, hidden=(4,))
    for s in params.subnets:
        perturb(s.biases, rng)
    params.intercept = 0.5
    shifted = copy.deepcopy(params)
    shifted.subnets[1].biases[-1][0] += 2.5
    shifted.intercept -= 2.5
    for _ in range(10):
        x = rng.normal(size=3)
        assert np.isclose(nam_forward(params, x)[0], nam_forward(shifted, x)[0], rtol=1e-12)


def test_variance_estimate_examples():
    assert variance_estimate(0.5) == 0.25
    assert variance_estimate(0.0) == 0.0
    assert variance_estimate(1.0) == 0.0
    assert np.isclose(variance_estimate(0.9), 0.09)
    with pytest.raises(DomainError):
        variance_estimate(1.2)
    with pytest.raises(DomainError):
        variance_estimate(-0.1)


def test_nam_feature_variances_values():
    sub = lambda c: MLPParams(weights=[np.zeros((1, 1))], biases=[np.array([c])])
    params = NAMParams(subnets=[sub(0.0), sub(2.0)], intercept=0.0)
    v = nam_feature_variances(params, np.array([1.0, 1.0]))
    assert np.isclose(v[0], 0.25)
    assert np.isclose(v[1], 0.104994, atol=1e-6)
    params_sat = NAMParams(subnets=[sub(50.0)], intercept=0.0)
    assert nam_feature_variances(params_sat, np.array([0.0]))[0] <= 1e-20
