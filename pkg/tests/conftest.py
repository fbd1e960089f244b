import os
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

# The real phishing CSV (Kaggle: eswarchandt/phishing-website-detector) is not
# redistributable here; tests that reproduce the paper's phishing numbers run
# only when it is present locally.
PHISHING_ENV = "GPSTREAM_PHISHING_CSV"


def phishing_csv_path():
    candidate = os.environ.get(PHISHING_ENV)
    if candidate and Path(candidate).is_file():
        return Path(candidate)
    default = REPO_ROOT / "data" / "phishing.csv"
    if default.is_file():
        return default
    return None


requires_phishing = pytest.mark.skipif(
    phishing_csv_path() is None,
    reason=f"phishing CSV not found (set {PHISHING_ENV} or place data/phishing.csv)",
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_classification(n=60, p=2, seed=0, scale=2.0):
    """Small separable-ish binary problem for fitting tests."""
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(n, p))
    latent = scale * X[:, 0] - scale * 0.5 * X[:, 1 % p]
    y = (gen.random(n) < 1.0 / (1.0 + np.exp(-latent))).astype(float)
    if y.min() == y.max():  # force both classes for metric tests
        y[0] = 1.0 - y[0]
    return X, y
