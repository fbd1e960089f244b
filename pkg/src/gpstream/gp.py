"""Full GP binary classification via the Laplace approximation.

Inference follows the numerically stable parameterization built on
B = I + W^{1/2} K W^{1/2}: the training covariance itself is never inverted,
so near-duplicate rows (common in coarse tabular data) are harmless.
Labels are mapped to {-1, +1} internally; the likelihood is the logistic
log sigma(y * f).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit

from .errors import (
    DimensionMismatchError,
    DomainError,
    NonConvergenceError,
)
from .kernels import (
    KernelParams,
    gram,
    kernel_eval,
    params_from_vector,
    params_to_vector,
    prior_variance,
    vector_bounds,
)
from .linalg import CholeskyFactor, cholesky, solve_psd

NEWTON_TOL = 1e-6
NEWTON_MAX_ITER = 100
NEWTON_FAIL_RESIDUAL = 1e-3

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(20)
_PROB_FLOOR = np.finfo(float).tiny
_PROB_CEIL = 1.0 - np.finfo(float).epsneg


@dataclass(frozen=True)
class LatentPrediction:
    """Posterior mean and variance of the latent function at one point."""

    mean: float
    variance: float


@dataclass(frozen=True)
class LaplaceState:
    """Fitted classifier state at the posterior mode.

    ``B_factor`` holds the Cholesky factor of I + W^{1/2} K W^{1/2} evaluated
    at the mode; predictions only ever solve against it.
    """

    X_train: np.ndarray
    y_pm: np.ndarray
    kernel: KernelParams
    f_hat: np.ndarray
    grad_at_mode: np.ndarray
    W_sqrt: np.ndarray
    B_factor: CholeskyFactor
    log_marginal: float

    @property
    def n_train(self) -> int:
        return self.X_train.shape[0]


def gp_regression_posterior(
    X: np.ndarray,
    y: np.ndarray,
    Xstar: np.ndarray,
    kernel: KernelParams,
    noise_variance: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact GP regression posterior at test points.

    Returns the mean vector K_mn (K_n + s2 I)^-1 y and covariance
    K_mm - K_mn (K_n + s2 I)^-1 K_nm, both via Cholesky solves.
    """
    if noise_variance < 0:
        raise DomainError(f"noise variance must be >= 0, got {noise_variance}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    Kn = gram(kernel, X, X) + noise_variance * np.eye(X.shape[0])
    factor = cholesky(Kn)
    Knm = gram(kernel, X, Xstar)
    alpha = solve_psd(factor, y)
    mean = Knm.T @ alpha
    Kmm = gram(kernel, Xstar, Xstar)
    cov = Kmm - Knm.T @ solve_psd(factor, Knm)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    # log sigma(z) = -softplus(-z), stable in both tails
    return -(np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z))))


def _newton_core(K: np.ndarray, t: np.ndarray, f_init: np.ndarray | None):
    """Newton ascent of log p(y|f) - f' K^-1 f / 2 in the W^{1/2} form.

    Returns (f_hat, grad, W_sqrt, B_factor, log_marginal).
    """
    n = K.shape[0]
    f = np.zeros(n) if f_init is None else np.array(f_init, dtype=float)
    identity = np.eye(n)
    delta = np.inf
    for _ in range(NEWTON_MAX_ITER):
        pi = expit(f)
        w = pi * (1.0 - pi)
        sw = np.sqrt(w)
        B = identity + (sw[:, None] * K) * sw[None, :]
        L = np.linalg.cholesky(B)
        b = w * f + (t - pi)
        Kb = K @ b
        c = solve_triangular(L, sw * Kb, lower=True)
        a = b - sw * solve_triangular(L.T, c, lower=False)
        f_new = K @ a
        delta = float(np.max(np.abs(f_new - f)))
        f = f_new
        if delta <= NEWTON_TOL:
            break
    if delta > NEWTON_FAIL_RESIDUAL:
        raise NonConvergenceError(
            f"Newton stalled after {NEWTON_MAX_ITER} iterations (last step {delta:.2e})"
        )
    pi = expit(f)
    grad = t - pi
    w = pi * (1.0 - pi)
    sw = np.sqrt(w)
    B = identity + (sw[:, None] * K) * sw[None, :]
    L = np.linalg.cholesky(B)
    y_pm = 2.0 * t - 1.0
    log_lik = float(np.sum(_log_sigmoid(y_pm * f)))
    log_marginal = -0.5 * float(grad @ f) + log_lik - float(np.sum(np.log(np.diag(L))))
    return f, grad, sw, CholeskyFactor(lower=L, jitter_used=0.0), log_marginal


def fit_laplace(
    X: np.ndarray,
    y: np.ndarray,
    kernel: KernelParams,
    *,
    f_init: np.ndarray | None = None,
    gram_matrix: np.ndarray | None = None,
) -> LaplaceState:
    """Fit the latent posterior mode by Newton's method.

    ``y`` holds {0, 1} labels; a single-class window is fit like any other.
    ``gram_matrix`` lets callers that already built K skip recomputing it.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise DimensionMismatchError("need at least two training points")
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("labels must be in {0, 1}")
    K = gram(kernel, X, X) if gram_matrix is None else gram_matrix
    f_hat, grad, sw, B_factor, log_marginal = _newton_core(K, y, f_init)
    return LaplaceState(
        X_train=X,
        y_pm=2.0 * y - 1.0,
        kernel=kernel,
        f_hat=f_hat,
        grad_at_mode=grad,
        W_sqrt=sw,
        B_factor=B_factor,
        log_marginal=log_marginal,
    )


def predict_latent_batch(state: LaplaceState, Xstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Latent means and variances at many points (vectorized)."""
    Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
    if Xstar.shape[1] != state.X_train.shape[1]:
        raise DimensionMismatchError(
            f"test points have {Xstar.shape[1]} columns, training data {state.X_train.shape[1]}"
        )
    Ks = gram(state.kernel, state.X_train, Xstar)
    means = Ks.T @ state.grad_at_mode
    V = solve_triangular(state.B_factor.lower, state.W_sqrt[:, None] * Ks, lower=True)
    variances = prior_variance(state.kernel) - np.sum(V * V, axis=0)
    return means, np.maximum(variances, 0.0)


def predict_latent(state: LaplaceState, xstar: np.ndarray) -> LatentPrediction:
    means, variances = predict_latent_batch(state, np.atleast_1d(xstar)[None, :])
    return LatentPrediction(mean=float(means[0]), variance=float(variances[0]))


def expected_sigmoid(mean, variance):
    """E[sigma(f)] under f ~ N(mean, variance), by 20-node Gauss-Hermite."""
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    scale = np.sqrt(2.0 * variance)
    z = scale[..., None] * _GH_NODES + mean[..., None]
    vals = expit(z) @ _GH_WEIGHTS / np.sqrt(np.pi)
    exact = expit(mean)
    out = np.where(variance == 0.0, exact, vals)
    return np.clip(out, _PROB_FLOOR, _PROB_CEIL)


def predict_proba_batch(state: LaplaceState, Xstar: np.ndarray) -> np.ndarray:
    means, variances = predict_latent_batch(state, Xstar)
    return expected_sigmoid(means, variances)


def predict_proba(state: LaplaceState, xstar: np.ndarray) -> float:
    pred = predict_latent(state, xstar)
    return float(expected_sigmoid(pred.mean, pred.variance))


def laplace_log_marginal(
    X: np.ndarray, y: np.ndarray, kernel: KernelParams
) -> float:
    """Laplace approximate evidence for given data and hyperparameters."""
    return fit_laplace(X, y, kernel).log_marginal


class _CachedEvidence:
    """Laplace evidence evaluations over fixed data, reusing distance matrices.

    SE kernels key a single squared-distance matrix; additive kernels cache the
    unit-variance exp factor of each 1-D component keyed by its lengthscale, so
    a one-coordinate perturbation (a finite-difference probe) only recomputes
    one component.
    """

    _CACHE_PER_COMPONENT = 3

    def __init__(self, X: np.ndarray, y: np.ndarray, template: KernelParams):
        from .kernels import AdditiveKernelParams  # local to avoid cycle noise

        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.y = np.asarray(y, dtype=float).ravel()
        self.template = template
        self.additive = isinstance(template, AdditiveKernelParams)
        if self.additive:
            self._d2 = [
                (self.X[:, j, None] - self.X[None, :, j]) ** 2
                for j in range(self.X.shape[1])
            ]
            self._exp_cache: list[dict[float, np.ndarray]] = [dict() for _ in self._d2]
        else:
            d2 = np.zeros((self.X.shape[0], self.X.shape[0]))
            for c in range(self.X.shape[1]):
                diff = self.X[:, c, None] - self.X[None, :, c]
                d2 += diff * diff
            self._d2_full = d2

    def _component_exp(self, j: int, log_l: float) -> np.ndarray:
        cache = self._exp_cache[j]
        hit = cache.get(log_l)
        if hit is None:
            hit = np.exp((-0.5 * np.exp(-2.0 * log_l)) * self._d2[j])
            if len(cache) >= self._CACHE_PER_COMPONENT:
                del cache[next(iter(cache))]
            cache[log_l] = hit
        return hit

    def gram_for(self, params: KernelParams) -> np.ndarray:
        if not self.additive:
            return params.signal_variance * np.exp(
                (-0.5 / params.lengthscale**2) * self._d2_full
            )
        K = np.full(self._d2[0].shape, params.bias_variance)
        for j, comp in enumerate(params.components):
            K += comp.signal_variance * self._component_exp(j, comp.log_lengthscale)
        return K

    def value(self, vec: np.ndarray, f_init: np.ndarray | None):
        """(log marginal, mode) at the given log-space vector; -inf on stall."""
        params = params_from_vector(self.template, vec)
        K = self.gram_for(params)
        try:
            f_hat, _, _, _, log_marginal = _newton_core(K, self.y, f_init)
        except NonConvergenceError:
            return -np.inf, None
        return log_marginal, f_hat


def optimize_hyperparameters(
    X: np.ndarray,
    y: np.ndarray,
    init: KernelParams,
    budget: int = 25,
    *,
    fd_step: float = 1e-4,
    max_backtracks: int = 10,
) -> KernelParams:
    """Ascend the Laplace evidence by finite-difference gradient steps.

    Central differences in log-space, backtracking line search, parameters
    clamped to the standard box. Steps are only ever accepted when they
    strictly improve the evidence, so the result is never worse than ``init``.
    """
    if budget < 1:
        raise DomainError("budget must be >= 1")
    lo, hi = vector_bounds(init)
    objective = _CachedEvidence(X, y, init)
    theta = np.clip(params_to_vector(init), lo, hi)
    best_val, best_mode = objective.value(theta, None)
    if not np.isfinite(best_val):
        raise NonConvergenceError("Laplace fit failed at the initial hyperparameters")

    for _ in range(budget):
        grad = np.zeros_like(theta)
        for i in range(theta.size):
            up = theta.copy()
            dn = theta.copy()
            up[i] = min(theta[i] + fd_step, hi[i])
            dn[i] = max(theta[i] - fd_step, lo[i])
            span = up[i] - dn[i]
            if span == 0.0:
                continue
            v_up, _ = objective.value(up, best_mode)
            v_dn, _ = objective.value(dn, best_mode)
            if np.isfinite(v_up) and np.isfinite(v_dn):
                grad[i] = (v_up - v_dn) / span
        gmax = float(np.max(np.abs(grad)))
        if gmax == 0.0:
            break
        step = 0.5 / gmax
        accepted = False
        for _ in range(max_backtracks):
            cand = np.clip(theta + step * grad, lo, hi)
            if np.array_equal(cand, theta):
                step *= 0.5
                continue
            val, mode = objective.value(cand, best_mode)
            if val > best_val:
                theta, best_val, best_mode = cand, val, mode
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return params_from_vector(init, theta)
