"""Online loop: rolling-buffer window composition, uncertainty-sampling
acquisition, and scheduled retraining over a batch stream.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .agp import fit_agp
from .datasets import StreamSplit
from .errors import DomainError, EmptyBufferError, OnlineStepError
from .gp import (
    LaplaceState,
    fit_laplace,
    optimize_hyperparameters,
    predict_latent_batch,
    predict_proba_batch,
)
from .kernels import default_additive_params, default_se_params
from .metrics import accuracy, f1_score
from .neural import (
    TrainConfig,
    init_mlp,
    init_nam,
    mlp_proba_batch,
    nam_proba_batch,
    train,
    MLP_HIDDEN,
)

MODEL_KINDS = ("nn", "gp", "nam", "agp")

# Fixed per-kind offsets mixed into the run seed so each model consumes an
# independent random stream over the identical split.
_KIND_SEED_OFFSET = {kind: 101 + i for i, kind in enumerate(MODEL_KINDS)}


@dataclass(frozen=True)
class OnlineConfig:
    window_proportion: float = 0.2
    batch_min: int = 50
    batch_max: int = 100
    al_fraction: float = 1.0
    seed: int = 0
    retrain_every: int = 1
    recent_fraction: float = 0.5
    opt_budget_initial: int = 25
    opt_budget_update: int = 5
    opt_subsample: int = 256
    shared_lengthscale: bool = False
    epochs: int = 50
    learning_rate: float = 1e-3
    minibatch_size: int = 32

    def __post_init__(self):
        if not 0 < self.window_proportion <= 1:
            raise DomainError("window_proportion must lie in (0, 1]")
        if not 0 < self.al_fraction <= 1:
            raise DomainError("al_fraction must lie in (0, 1]")
        if not 0 <= self.recent_fraction <= 1:
            raise DomainError("recent_fraction must lie in [0, 1]")
        if self.batch_min < 1 or self.batch_max < self.batch_min:
            raise DomainError("need 1 <= batch_min <= batch_max")
        if self.retrain_every < 1:
            raise DomainError("retrain_every must be >= 1")


@dataclass
class RollingBuffer:
    """Arrival-ordered store of labeled samples; windows are composed from it."""

    capacity: int
    recent_fraction: float = 0.5
    samples: list[tuple[np.ndarray, int, int]] = field(default_factory=list)
    _next_arrival: int = 0

    def extend(self, X: np.ndarray, y: np.ndarray) -> None:
        for row, label in zip(np.atleast_2d(X), np.atleast_1d(y)):
            self.samples.append((row, int(label), self._next_arrival))
            self._next_arrival += 1

    def __len__(self) -> int:
        return len(self.samples)


def compose_window(buffer: RollingBuffer, rng: np.random.Generator):
    """Training window: newest ceil(recent_fraction * capacity) samples plus a
    uniform draw (without replacement) from the older history, up to capacity.
    """
    if len(buffer) == 0:
        raise EmptyBufferError("cannot compose a window from an empty buffer")
    if len(buffer) <= buffer.capacity:
        chosen = buffer.samples
    else:
        n_recent = min(math.ceil(buffer.recent_fraction * buffer.capacity), buffer.capacity)
        older = buffer.samples[: len(buffer) - n_recent]
        recent = buffer.samples[len(buffer) - n_recent :]
        n_hist = buffer.capacity - n_recent
        picks = rng.choice(len(older), size=n_hist, replace=False) if n_hist else []
        chosen = sorted(
            [older[i] for i in picks] + recent, key=lambda s: s[2]
        )
    X = np.array([s[0] for s in chosen])
    y = np.array([s[1] for s in chosen], dtype=int)
    return X, y


def acquire(variances: np.ndarray, fraction: float) -> np.ndarray:
    """Indices of the ceil(fraction * n) highest-variance samples, variance
    descending, ties broken by lower index. Deterministic.
    """
    variances = np.asarray(variances, dtype=float).ravel()
    if not 0 < fraction <= 1:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    if not np.all(np.isfinite(variances)):
        raise DomainError("variances must be finite")
    k = math.ceil(fraction * variances.size)
    order = np.lexsort((np.arange(variances.size), -variances))
    return order[:k]


class _GPAdapter:
    """GP or additive-GP model for the online loop.

    Hyperparameters are re-optimized on a capped subsample of each window
    (full-window finite-difference refits would dwarf the fit itself), then
    the Laplace mode is fit from scratch on the whole window.
    """

    def __init__(self, kind: str, n_features: int, config: OnlineConfig, rng: np.random.Generator):
        self.kind = kind
        self.config = config
        self.rng = rng
        if kind == "agp":
            self.params = default_additive_params(n_features, config.shared_lengthscale)
        else:
            self.params = default_se_params(n_features)
        self.state: LaplaceState | None = None
        self.last_opt_seconds = 0.0
        self.last_fit_seconds = 0.0

    def _optimize(self, X, y, budget):
        if budget < 1:
            return
        cap = self.config.opt_subsample
        if X.shape[0] > cap:
            idx = self.rng.choice(X.shape[0], size=cap, replace=False)
            Xo, yo = X[idx], y[idx]
        else:
            Xo, yo = X, y
        self.params = optimize_hyperparameters(Xo, yo, self.params, budget)

    def _refit(self, X, y, budget):
        t0 = time.perf_counter()
        self._optimize(X, y, budget)
        t1 = time.perf_counter()
        self.state = fit_laplace(X, y, self.params)
        self.last_opt_seconds = t1 - t0
        self.last_fit_seconds = time.perf_counter() - t1

    def fit_initial(self, X, y):
        self._refit(X, y, self.config.opt_budget_initial)

    def retrain(self, X, y):
        self._refit(X, y, self.config.opt_budget_update)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba_batch(self.state, X)

    def acquisition_variance(self, X) -> np.ndarray:
        """Latent (epistemic) posterior variance."""
        _, variances = predict_latent_batch(self.state, X)
        return variances


class _NeuralAdapter:
    """MLP or NAM model; retrains warm-start from the current parameters."""

    def __init__(self, kind: str, n_features: int, config: OnlineConfig, rng: np.random.Generator):
        self.kind = kind
        self.config = config
        self.rng = rng
        if kind == "nam":
            self.params = init_nam(n_features, rng)
        else:
            self.params = init_mlp([n_features, *MLP_HIDDEN, 1], rng)
        self.last_opt_seconds = 0.0
        self.last_fit_seconds = 0.0

    def _train(self, X, y):
        cfg = TrainConfig(
            learning_rate=self.config.learning_rate,
            epochs=self.config.epochs,
            minibatch_size=self.config.minibatch_size,
            seed=int(self.rng.integers(0, 2**31 - 1)),
        )
        t0 = time.perf_counter()
        self.params = train(self.params, (X, y), cfg)
        self.last_fit_seconds = time.perf_counter() - t0
        self.last_opt_seconds = 0.0

    fit_initial = _train
    retrain = _train

    def predict_proba(self, X) -> np.ndarray:
        if self.kind == "nam":
            return nam_proba_batch(self.params, X)
        return mlp_proba_batch(self.params, X)

    def acquisition_variance(self, X) -> np.ndarray:
        """Plug-in p(1-p) decision variance (no epistemic component)."""
        p = self.predict_proba(X)
        return p * (1.0 - p)


def make_model(kind: str, n_features: int, config: OnlineConfig, rng: np.random.Generator):
    if kind not in MODEL_KINDS:
        raise DomainError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if kind in ("gp", "agp"):
        return _GPAdapter(kind, n_features, config, rng)
    return _NeuralAdapter(kind, n_features, config, rng)


@dataclass
class StepRecord:
    """Per-batch log: predictions made before the update, what was acquired,
    and prequential batch metrics."""

    step: int
    predictions: np.ndarray
    variances: np.ndarray
    labels_acquired: np.ndarray
    f1: float
    accuracy: float


@dataclass
class OnlineRunResult:
    records: list[StepRecord]
    model: object
    capacity: int
    fit_seconds: list[float]
    opt_seconds: list[float]


def run_online(model_kind: str, split: StreamSplit, config: OnlineConfig) -> OnlineRunResult:
    """The four-step loop: predict each incoming batch, score it, acquire the
    most uncertain fraction for labeling, and retrain on the composed window.

    The window capacity is ceil(window_proportion * total training rows),
    fixed up front. All randomness comes from one generator derived from the
    config seed and the model kind, so runs are reproducible bit-for-bit.
    """
    if model_kind not in MODEL_KINDS:
        raise DomainError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}")
    rng = np.random.default_rng([config.seed, _KIND_SEED_OFFSET[model_kind]])
    capacity = math.ceil(config.window_proportion * split.n_train_total)
    buffer = RollingBuffer(capacity=capacity, recent_fraction=config.recent_fraction)
    buffer.extend(split.initial_X, split.initial_y)
    model = make_model(model_kind, split.initial_X.shape[1], config, rng)

    fit_seconds: list[float] = []
    opt_seconds: list[float] = []
    try:
        model.fit_initial(split.initial_X, split.initial_y)
    except Exception as exc:  # noqa: BLE001 - annotate with the step index
        raise OnlineStepError(0, exc) from exc
    fit_seconds.append(model.last_fit_seconds)
    opt_seconds.append(model.last_opt_seconds)

    init_probs = model.predict_proba(split.initial_X)
    records = [
        StepRecord(
            step=0,
            predictions=init_probs,
            variances=model.acquisition_variance(split.initial_X),
            labels_acquired=np.empty(0, dtype=int),
            f1=f1_score(init_probs, split.initial_y),
            accuracy=accuracy(init_probs, split.initial_y),
        )
    ]

    for step, (Xb, yb) in enumerate(split.batches, start=1):
        probs = model.predict_proba(Xb)
        variances = model.acquisition_variance(Xb)
        selected = acquire(variances, config.al_fraction)
        buffer.extend(Xb[selected], yb[selected])
        if step % config.retrain_every == 0:
            Xw, yw = compose_window(buffer, rng)
            try:
                model.retrain(Xw, yw)
            except Exception as exc:  # noqa: BLE001
                raise OnlineStepError(step, exc) from exc
            fit_seconds.append(model.last_fit_seconds)
            opt_seconds.append(model.last_opt_seconds)
        records.append(
            StepRecord(
                step=step,
                predictions=probs,
                variances=variances,
                labels_acquired=selected,
                f1=f1_score(probs, yb),
                accuracy=accuracy(probs, yb),
            )
        )
    return OnlineRunResult(
        records=records,
        model=model,
        capacity=capacity,
        fit_seconds=fit_seconds,
        opt_seconds=opt_seconds,
    )
