"""Squared Exponential and additive kernels, Gram matrices, per-component
cross-covariances.

Hyperparameters are stored in log-space so unconstrained optimization keeps
them positive. The additive kernel is a constant (bias) term plus one 1-D SE
kernel per input dimension, each acting on its own coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

import math

import numpy as np

from .errors import DimensionMismatchError, IndexOutOfRangeError

# Clamp boxes for hyperparameter optimization, in log-space.
LOG_LENGTHSCALE_BOUNDS = (-3.0, 4.0)
LOG_SIGNAL_VARIANCE_BOUNDS = (-3.0, 3.0)
LOG_BIAS_VARIANCE_BOUNDS = (-5.0, 2.0)


@dataclass(frozen=True)
class SEParams:
    """Squared Exponential hyperparameters: log signal variance, log lengthscale."""

    log_signal_variance: float = 0.0
    log_lengthscale: float = 0.0

    @property
    def signal_variance(self) -> float:
        return math.exp(self.log_signal_variance)

    @property
    def lengthscale(self) -> float:
        return math.exp(self.log_lengthscale)


@dataclass(frozen=True)
class AdditiveKernelParams:
    """Bias variance k0 plus one SE component per input dimension.

    When ``shared_lengthscale`` is set, all components are constrained to one
    common lengthscale during optimization (cheaper: p+2 instead of 2p+1 free
    hyperparameters).
    """

    log_bias_variance: float
    components: tuple[SEParams, ...]
    shared_lengthscale: bool = False

    def __post_init__(self):
        if len(self.components) < 1:
            raise DimensionMismatchError("additive kernel needs at least one component")

    @property
    def bias_variance(self) -> float:
        return math.exp(self.log_bias_variance)

    @property
    def n_features(self) -> int:
        return len(self.components)


KernelParams = Union[SEParams, AdditiveKernelParams]
KernelFn = Callable[[np.ndarray, np.ndarray], float]


def default_se_params(n_features: int) -> SEParams:
    """Multidimensional SE init: lengthscale sqrt(p) so typical squared
    distances land near the kernel's active range."""
    return SEParams(log_signal_variance=0.0, log_lengthscale=0.5 * math.log(max(n_features, 1)))


def default_additive_params(n_features: int, shared_lengthscale: bool = False) -> AdditiveKernelParams:
    return AdditiveKernelParams(
        log_bias_variance=0.0,
        components=tuple(SEParams() for _ in range(n_features)),
        shared_lengthscale=shared_lengthscale,
    )


def se_eval(params: SEParams, x: np.ndarray, x2: np.ndarray) -> float:
    """sigma_f^2 * exp(-||x - x2||^2 / (2 l^2)) for two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise DimensionMismatchError(f"point shapes differ: {x.shape} vs {x2.shape}")
    d = x - x2
    sq = float(np.dot(d, d))
    return params.signal_variance * math.exp(-0.5 * sq / params.lengthscale**2)


def additive_eval(params: AdditiveKernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    """k0 + sum_j k_j(x_j, x2_j), each component on its own coordinate."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    p = params.n_features
    if x.shape != (p,) or x2.shape != (p,):
        raise DimensionMismatchError(
            f"expected points of dimension {p}, got {x.shape} and {x2.shape}"
        )
    total = params.bias_variance
    for j, comp in enumerate(params.components):
        diff = x[j] - x2[j]
        total += comp.signal_variance * math.exp(-0.5 * diff * diff / comp.lengthscale**2)
    return total


def _se_gram_1d(comp: SEParams, col: np.ndarray, col2: np.ndarray) -> np.ndarray:
    d = col[:, None] - col2[None, :]
    return comp.signal_variance * np.exp((-0.5 / comp.lengthscale**2) * d * d)


def _se_gram(params: SEParams, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    sq = np.zeros((X.shape[0], X2.shape[0]))
    for c in range(X.shape[1]):
        d = X[:, c, None] - X2[None, :, c]
        sq += d * d
    return params.signal_variance * np.exp((-0.5 / params.lengthscale**2) * sq)


def _additive_gram(params: AdditiveKernelParams, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    out = np.full((X.shape[0], X2.shape[0]), params.bias_variance)
    for j, comp in enumerate(params.components):
        out += _se_gram_1d(comp, X[:, j], X2[:, j])
    return out


def gram(kernel, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix with entry (i, k) = kernel(X[i], X2[k]).

    ``kernel`` is either a parameter object (vectorized fast path) or any
    callable over two points (evaluated row by row).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X.shape[1] != X2.shape[1]:
        raise DimensionMismatchError(
            f"inputs have {X.shape[1]} and {X2.shape[1]} columns"
        )
    if isinstance(kernel, SEParams):
        return _se_gram(kernel, X, X2)
    if isinstance(kernel, AdditiveKernelParams):
        if X.shape[1] != kernel.n_features:
            raise DimensionMismatchError(
                f"kernel has {kernel.n_features} components, inputs have {X.shape[1]} columns"
            )
        return _additive_gram(kernel, X, X2)
    out = np.empty((X.shape[0], X2.shape[0]))
    for i in range(X.shape[0]):
        for k in range(X2.shape[0]):
            out[i, k] = kernel(X[i], X2[k])
    return out


def kernel_eval(params: KernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    if isinstance(params, AdditiveKernelParams):
        return additive_eval(params, x, x2)
    return se_eval(params, x, x2)


def prior_variance(params: KernelParams) -> float:
    """k(x, x); constant for these stationary kernels."""
    if isinstance(params, AdditiveKernelParams):
        return params.bias_variance + sum(c.signal_variance for c in params.components)
    return params.signal_variance


def component_cross(
    params: AdditiveKernelParams, j: int, X: np.ndarray, xstar: np.ndarray
) -> np.ndarray:
    """Cross-covariances of the j-th 1-D component between rows of X and xstar.

    Only coordinate j participates; the bias term is excluded.
    """
    if not 0 <= j < params.n_features:
        raise IndexOutOfRangeError(f"component {j} out of range for p={params.n_features}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    return _se_gram_1d(params.components[j], X[:, j], xstar[j : j + 1])[:, 0]


# ---------------------------------------------------------------------------
# Flat log-space vector view used by hyperparameter optimization.
# ---------------------------------------------------------------------------


def params_to_vector(params: KernelParams) -> np.ndarray:
    if isinstance(params, SEParams):
        return np.array([params.log_signal_variance, params.log_lengthscale])
    if params.shared_lengthscale:
        head = [params.log_bias_variance]
        head += [c.log_signal_variance for c in params.components]
        head.append(params.components[0].log_lengthscale)
        return np.array(head)
    out = [params.log_bias_variance]
    for c in params.components:
        out.append(c.log_signal_variance)
        out.append(c.log_lengthscale)
    return np.array(out)


def params_from_vector(template: KernelParams, vec: np.ndarray) -> KernelParams:
    vec = np.asarray(vec, dtype=float)
    if isinstance(template, SEParams):
        return SEParams(log_signal_variance=vec[0], log_lengthscale=vec[1])
    p = template.n_features
    if template.shared_lengthscale:
        log_l = vec[p + 1]
        comps = tuple(
            SEParams(log_signal_variance=vec[1 + j], log_lengthscale=log_l) for j in range(p)
        )
    else:
        comps = tuple(
            SEParams(log_signal_variance=vec[1 + 2 * j], log_lengthscale=vec[2 + 2 * j])
            for j in range(p)
        )
    return replace(template, log_bias_variance=vec[0], components=comps)


def vector_bounds(template: KernelParams) -> tuple[np.ndarray, np.ndarray]:
    """Element-wise clamp box matching ``params_to_vector`` layout."""
    sv_lo, sv_hi = LOG_SIGNAL_VARIANCE_BOUNDS
    l_lo, l_hi = LOG_LENGTHSCALE_BOUNDS
    b_lo, b_hi = LOG_BIAS_VARIANCE_BOUNDS
    if isinstance(template, SEParams):
        return np.array([sv_lo, l_lo]), np.array([sv_hi, l_hi])
    p = template.n_features
    if template.shared_lengthscale:
        lo = [b_lo] + [sv_lo] * p + [l_lo]
        hi = [b_hi] + [sv_hi] * p + [l_hi]
    else:
        lo = [b_lo] + [sv_lo, l_lo] * p
        hi = [b_hi] + [sv_hi, l_hi] * p
    return np.array(lo), np.array(hi)
