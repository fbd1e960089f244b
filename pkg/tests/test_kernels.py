import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpstream.errors import DimensionMismatchError, IndexOutOfRangeError
from gpstream.kernels import (
    AdditiveKernelParams,
    SEParams,
    additive_eval,
    component_cross,
    default_additive_params,
    gram,
    params_from_vector,
    params_to_vector,
    prior_variance,
    se_eval,
    vector_bounds,
)
from gpstream.linalg import cholesky

finite_floats = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_se_zero_distance_gives_signal_variance():
    params = SEParams(log_signal_variance=math.log(2.5), log_lengthscale=0.7)
    x = np.array([0.3, -1.2])
    assert np.isclose(se_eval(params, x, x), 2.5)


def test_se_unit_case():
    params = SEParams(0.0, 0.0)
    val = se_eval(params, np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    assert np.isclose(val, math.exp(-1.0), atol=1e-12)


def test_se_far_apart_vanishes():
    params = SEParams(0.0, 0.0)
    assert se_eval(params, np.array([0.0]), np.array([100.0])) <= 1e-300


def test_se_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        se_eval(SEParams(), np.ones(2), np.ones(3))


@given(
    st.lists(finite_floats, min_size=1, max_size=4),
    st.lists(finite_floats, min_size=1, max_size=4),
    finite_floats,
    st.floats(min_value=-1.5, max_value=1.5),
)
@settings(max_examples=60, deadline=None)
def test_se_symmetric(xs, ys, lsv, ll):
    n = min(len(xs), len(ys))
    x, y = np.array(xs[:n]), np.array(ys[:n])
    params = SEParams(lsv, ll)
    assert se_eval(params, x, y) == se_eval(params, y, x)


def test_additive_single_component():
    params = AdditiveKernelParams(math.log(0.3), (SEParams(0.0, 0.0),))
    v = additive_eval(params, np.array([0.5]), np.array([1.5]))
    assert np.isclose(v, 0.3 + math.exp(-0.5))


def test_additive_zero_distance():
    params = default_additive_params(3)
    x = np.array([0.1, 0.2, 0.3])
    assert np.isclose(additive_eval(params, x, x), prior_variance(params))


def test_additive_two_dim_hand_value():
    params = AdditiveKernelParams(math.log(0.1), (SEParams(), SEParams()))
    v = additive_eval(params, np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    assert np.isclose(v, 0.1 + math.exp(-0.5) + 1.0, atol=1e-6)
    assert np.isclose(v, 1.706531, atol=1e-6)


def test_gram_single_row():
    g = gram(SEParams(math.log(2.0), 0.0), np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]]))
    assert g.shape == (1, 1)
    assert np.isclose(g[0, 0], 2.0)


def test_gram_duplicate_rows_constant():
    X = np.array([[0.5, 0.5], [0.5, 0.5]])
    g = gram(SEParams(), X, X)
    assert np.allclose(g, 1.0)


def test_gram_matches_pairwise_loop(rng):
    X = rng.normal(size=(3, 2))
    X2 = rng.normal(size=(2, 2))
    params = SEParams(0.3, -0.2)
    g = gram(params, X, X2)
    for i in range(3):
        for k in range(2):
            assert np.isclose(g[i, k], se_eval(params, X[i], X2[k]), rtol=1e-12)


def test_gram_additive_matches_pairwise_loop(rng):
    X = rng.normal(size=(4, 3))
    params = default_additive_params(3)
    g = gram(params, X, X)
    for i in range(4):
        for k in range(4):
            assert np.isclose(g[i, k], additive_eval(params, X[i], X[k]), rtol=1e-12)


def test_gram_accepts_plain_closure(rng):
    X = rng.normal(size=(3, 2))
    g = gram(lambda a, b: float(a @ b), X, X)
    assert np.allclose(g, X @ X.T)


def test_gram_column_mismatch():
    with pytest.raises(DimensionMismatchError):
        gram(SEParams(), np.ones((2, 2)), np.ones((2, 3)))


def test_additive_gram_pd_after_jitter(rng):
    for n in (5, 18, 30):
        X = rng.normal(size=(n, 4))
        g = gram(default_additive_params(4), X, X)
        factor = cholesky(g + 1e-8 * np.eye(n))
        assert factor.lower.shape == (n, n)


def test_component_cross_matching_point():
    params = default_additive_params(2)
    X = np.array([[0.4, -0.7]])
    v = component_cross(params, 1, X, np.array([9.9, -0.7]))
    assert np.isclose(v[0], params.components[1].signal_variance)


def test_component_cross_unit_distance():
    params = default_additive_params(2)
    X = np.array([[1.0, 0.0], [2.0, 3.0]])
    v = component_cross(params, 0, X, np.array([0.0, 50.0]))
    assert np.allclose(v, [math.exp(-0.5), math.exp(-2.0)])


def test_component_cross_out_of_range():
    with pytest.raises(IndexOutOfRangeError):
        component_cross(default_additive_params(2), 2, np.ones((1, 2)), np.ones(2))


def test_decomposition_identity(rng):
    params = AdditiveKernelParams(
        math.log(0.2),
        tuple(SEParams(rng.normal(), rng.normal() * 0.3) for _ in range(4)),
    )
    X = rng.normal(size=(6, 4))
    xstar = rng.normal(size=4)
    total = np.full(6, params.bias_variance)
    for j in range(4):
        total += component_cross(params, j, X, xstar)
    direct = np.array([additive_eval(params, X[i], xstar) for i in range(6)])
    assert np.max(np.abs(total - direct)) <= 1e-12


def test_vector_round_trip():
    params = AdditiveKernelParams(
        -0.4, (SEParams(0.1, 0.2), SEParams(-0.3, 0.5)), shared_lengthscale=False
    )
    vec = params_to_vector(params)
    assert vec.shape == (5,)
    back = params_from_vector(params, vec)
    assert back == params

    shared = AdditiveKernelParams(
        -0.4, (SEParams(0.1, 0.7), SEParams(-0.3, 0.7)), shared_lengthscale=True
    )
    vec = params_to_vector(shared)
    assert vec.shape == (4,)
    assert params_from_vector(shared, vec) == shared

    se = SEParams(0.5, -0.1)
    assert params_from_vector(se, params_to_vector(se)) == se


def test_vector_bounds_shapes():
    lo, hi = vector_bounds(default_additive_params(3))
    assert lo.shape == hi.shape == (7,)
    assert np.all(lo < hi)
    lo, hi = vector_bounds(SEParams())
    assert lo.tolist() == [-3.0, -3.0]
    assert hi.tolist() == [3.0, 4.0]
