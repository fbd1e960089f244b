"""Dense symmetric linear algebra: Cholesky with jitter escalation, PSD solves,
log-determinants.

Matrices are plain row-major ``numpy`` arrays. Window sizes stay in the low
thousands, so there are no sparse or blocked paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    NotSymmetricError,
)

SYMMETRY_TOL = 1e-10
DEFAULT_MAX_JITTER = 1e-2
_JITTER_START = 1e-8


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T = M + jitter_used * I."""

    lower: np.ndarray
    jitter_used: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def cholesky(m: np.ndarray, max_jitter: float = DEFAULT_MAX_JITTER) -> CholeskyFactor:
    """Factor a symmetric PSD matrix, escalating diagonal jitter by 10x as needed.

    The jitter ladder is 0, 1e-8, 1e-7, ... capped at ``max_jitter``; the first
    level at which LAPACK succeeds is recorded in the result.

    Raises:
        NotSymmetricError: if ``m`` deviates from symmetry by more than 1e-10.
        NotPositiveDefiniteError: if factorization fails at every ladder level.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise NotSymmetricError(
            f"matrix asymmetry {np.max(np.abs(m - m.T)):.3e} exceeds {SYMMETRY_TOL:.0e}"
        )
    jitter = 0.0
    while True:
        try:
            shifted = m if jitter == 0.0 else m + jitter * np.eye(m.shape[0])
            lower = np.linalg.cholesky(shifted)
            return CholeskyFactor(lower=lower, jitter_used=jitter)
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > max_jitter * (1.0 + 1e-12):
                raise NotPositiveDefiniteError(
                    f"not positive definite even with jitter {max_jitter:.1e}"
                ) from None


def solve_psd(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve (L @ L.T) x = b. ``b`` may be a vector or a matrix of columns."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.dim:
        raise DimensionMismatchError(
            f"rhs has leading dimension {b.shape[0]}, factor is {factor.dim}"
        )
    return cho_solve((factor.lower, True), b, check_finite=False)


def log_det(factor: CholeskyFactor) -> float:
    """Log-determinant of the factored matrix: 2 * sum(log diag L)."""
    return 2.0 * float(np.sum(np.log(np.diag(factor.lower))))
