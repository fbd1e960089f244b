import math

import numpy as np
import pytest
from scipy.linalg import solve_triangular
from scipy.special import expit

from conftest import toy_classification
from gpstream.agp import (
    ContributionBreakdown,
    contribution_breakdown,
    contribution_breakdown_batch,
    fit_agp,
    top_contributor,
    top_variance_feature,
)
from gpstream.errors import KernelKindMismatchError
from gpstream.gp import fit_laplace, predict_latent
from gpstream.gp import _newton_core
from gpstream.kernels import (
    AdditiveKernelParams,
    SEParams,
    additive_eval,
    default_additive_params,
    gram,
)


def breakdown(bias_mean=0.0, bias_var=0.1, means=(0.0,), variances=(0.1,)):
    return ContributionBreakdown(
        bias_mean=bias_mean,
        bias_variance=bias_var,
        feature_means=np.array(means),
        feature_variances=np.array(variances),
    )


def test_single_component_reduces_to_closure_gp(rng):
    X, y = toy_classification(20, 1, seed=1)
    params = AdditiveKernelParams(math.log(0.3), (SEParams(0.2, 0.1),))
    state = fit_agp(X, y, params, budget=0)

    # reference: same covariance built through the generic closure path
    K = gram(lambda a, b: additive_eval(params, a, b), X, X)
    f_ref, grad_ref, sw_ref, B_ref, _ = _newton_core(K, y, None)
    assert np.max(np.abs(state.f_hat - f_ref)) <= 1e-8
    for xstar in rng.normal(size=(10, 1)):
        pred = predict_latent(state, xstar)
        ks = gram(lambda a, b: additive_eval(params, a, b), X, xstar[None, :])[:, 0]
        mean_ref = ks @ grad_ref
        v = solve_triangular(B_ref.lower, sw_ref * ks, lower=True)
        var_ref = additive_eval(params, xstar, xstar) - v @ v
        assert abs(pred.mean - mean_ref) <= 1e-8
        assert abs(pred.variance - var_ref) <= 1e-8


def test_noise_feature_gets_smaller_signal_variance():
    gen = np.random.default_rng(8)
    n = 120
    X = gen.uniform(-2, 2, size=(n, 2))
    latent = 3.0 * np.tanh(1.5 * X[:, 0])  # feature 1 carries no signal
    y = (gen.random(n) < expit(latent)).astype(float)
    state = fit_agp(X, y, default_additive_params(2), budget=10)
    sv0 = state.kernel.components[0].signal_variance
    sv1 = state.kernel.components[1].signal_variance
    assert sv1 <= sv0


def test_duplicated_feature_columns_share_contributions(rng):
    X, y = toy_classification(30, 1, seed=2)
    Xdup = np.hstack([X, X])
    state = fit_agp(Xdup, y, default_additive_params(2), budget=0)
    for xstar in rng.normal(size=(8, 1)):
        b = contribution_breakdown(state, np.array([xstar[0], xstar[0]]))
        assert abs(b.feature_means[0] - b.feature_means[1]) <= 1e-6
        assert abs(b.feature_variances[0] - b.feature_variances[1]) <= 1e-6


def test_decomposition_identity(rng):
    X, y = toy_classification(40, 3, seed=5)
    state = fit_agp(X, y, default_additive_params(3), budget=2)
    Xstar = rng.normal(size=(100, 3))
    bias_mean, bias_var, means, variances = contribution_breakdown_batch(state, Xstar)
    for i in range(100):
        full = predict_latent(state, Xstar[i])
        assert abs(bias_mean + means[i].sum() - full.mean) <= 1e-8
    assert bias_var >= 0
    assert np.all(variances >= 0)
    for j, comp in enumerate(state.kernel.components):
        assert np.all(variances[:, j] <= comp.signal_variance + 1e-8)


def test_out_of_range_coordinate_reverts_to_component_prior():
    X, y = toy_classification(30, 2, seed=6)
    state = fit_agp(X, y, default_additive_params(2), budget=0)
    xstar = np.array([0.0, 1000.0])
    b = contribution_breakdown(state, xstar)
    sv1 = state.kernel.components[1].signal_variance
    assert np.isclose(b.feature_variances[1], sv1, atol=1e-10)
    assert abs(b.feature_means[1]) <= 1e-10


def test_variance_matches_dense_inverse_oracle():
    gen = np.random.default_rng(3)
    X = gen.normal(size=(3, 2))
    y = np.array([1.0, 0.0, 1.0])
    params = default_additive_params(2)
    state = fit_agp(X, y, params, budget=0)
    K = gram(params, X, X)
    pi = expit(state.f_hat)
    w = pi * (1 - pi)
    inv = np.linalg.inv(K + np.diag(1.0 / w))
    xstar = gen.normal(size=2)
    b = contribution_breakdown(state, xstar)
    for j in range(2):
        comp = params.components[j]
        v = comp.signal_variance * np.exp(-0.5 * (X[:, j] - xstar[j]) ** 2 / comp.lengthscale**2)
        var_oracle = comp.signal_variance - v @ inv @ v
        assert abs(b.feature_variances[j] - var_oracle) <= 1e-8
    bias_vec = np.full(3, params.bias_variance)
    bias_oracle = params.bias_variance - bias_vec @ inv @ bias_vec
    assert abs(b.bias_variance - bias_oracle) <= 1e-8


def test_breakdown_requires_additive_kernel():
    X, y = toy_classification(10, 2, seed=0)
    state = fit_laplace(X, y, SEParams())
    with pytest.raises(KernelKindMismatchError):
        contribution_breakdown(state, np.zeros(2))


def test_top_contributor_examples():
    assert top_contributor(breakdown(means=(0.1, -2.0, 0.3))) == 1
    assert top_contributor(breakdown(means=(0.0, 0.0, 0.0))) == 0
    assert top_contributor(breakdown(means=(0.5, 0.5))) == 0


def test_top_variance_examples():
    assert top_variance_feature(breakdown(variances=(0.1, 0.9, 0.2))) == 1
    assert top_variance_feature(breakdown(variances=(0.3, 0.3, 0.3))) == 0


def test_argmax_invariant_under_common_rescaling(rng):
    means = rng.normal(size=6)
    b1 = breakdown(means=means, variances=np.abs(rng.normal(size=6)))
    b2 = breakdown(means=5.0 * means, variances=b1.feature_variances)
    assert top_contributor(b1) == top_contributor(b2)


def test_gap_dataset_flags_sparse_feature():
    gen = np.random.default_rng(4)
    n = 80
    x0 = gen.uniform(-2, 2, size=n)  # dense everywhere
    x1 = np.where(gen.random(n) < 0.5, gen.uniform(-2, -1.2, n), gen.uniform(1.2, 2, n))
    X = np.column_stack([x0, x1])
    y = (gen.random(n) < expit(2.0 * x0)).astype(float)
    state = fit_agp(X, y, default_additive_params(2), budget=0)
    # probe inside feature 1's gap: its component must dominate the variance pick
    for probe0 in (-1.0, 0.0, 1.0):
        b = contribution_breakdown(state, np.array([probe0, 0.0]))
        assert top_variance_feature(b) == 1


def test_permutation_equivariance(rng):
    X, y = toy_classification(25, 3, seed=9)
    params = AdditiveKernelParams(
        -0.5, (SEParams(0.1, 0.0), SEParams(-0.2, 0.3), SEParams(0.4, -0.1))
    )
    perm = [2, 0, 1]
    params_perm = AdditiveKernelParams(-0.5, tuple(params.components[j] for j in perm))
    state = fit_agp(X, y, params, budget=0)
    state_perm = fit_agp(X[:, perm], y, params_perm, budget=0)
    for xstar in rng.normal(size=(5, 3)):
        b = contribution_breakdown(state, xstar)
        bp = contribution_breakdown(state_perm, xstar[perm])
        assert np.max(np.abs(b.feature_means[perm] - bp.feature_means)) <= 1e-10
        assert np.max(np.abs(b.feature_variances[perm] - bp.feature_variances)) <= 1e-10
        assert abs(b.bias_mean - bp.bias_mean) <= 1e-10
