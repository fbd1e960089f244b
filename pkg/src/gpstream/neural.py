"""From-scratch MLP and Neural Additive Model with Adam training.

The NAM holds one tiny subnet per input feature; all subnets share an
architecture, so training runs them as stacked tensors (leading axis =
feature) and unpacks back into per-feature parameter lists afterwards.
Loss is binary cross-entropy computed from logits in log-sum-exp form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatchError, DomainError, NonFiniteLossError

MLP_HIDDEN = (64, 64)
NAM_HIDDEN = (32, 32)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MLPParams:
    """Feed-forward net: ReLU hidden layers, linear scalar output (the logit)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


@dataclass
class NAMParams:
    """One scalar-to-scalar subnet per feature plus a global intercept."""

    subnets: list[MLPParams]
    intercept: float = 0.0

    @property
    def n_features(self) -> int:
        return len(self.subnets)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 50
    minibatch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.minibatch_size < 1:
            raise DomainError("minibatch_size must be >= 1")


def init_mlp(layer_sizes: list[int], rng: np.random.Generator) -> MLPParams:
    """He-normal weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights=weights, biases=biases)


def init_nam(
    n_features: int, rng: np.random.Generator, hidden: tuple[int, ...] = NAM_HIDDEN
) -> NAMParams:
    sizes = [1, *hidden, 1]
    return NAMParams(subnets=[init_mlp(sizes, rng) for _ in range(n_features)], intercept=0.0)


def _mlp_logits(params: MLPParams, X: np.ndarray) -> np.ndarray:
    a = X
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
    return (a @ params.weights[-1] + params.biases[-1])[:, 0]


def mlp_forward(params: MLPParams, x: np.ndarray) -> tuple[float, float]:
    """Probability and logit for a single input vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != params.weights[0].shape[0]:
        raise DimensionMismatchError(
            f"input has {x.shape[0]} entries, first layer expects {params.weights[0].shape[0]}"
        )
    logit = float(_mlp_logits(params, x[None, :])[0])
    return float(expit(logit)), logit


class _NamStack:
    """Stacked view of NAM parameters: arrays with a leading feature axis."""

    def __init__(self, params: NAMParams):
        subs = params.subnets
        n_layers = len(subs[0].weights)
        self.arrays: list[np.ndarray] = []
        for layer in range(n_layers):
            self.arrays.append(np.stack([s.weights[layer] for s in subs]))
            self.arrays.append(np.stack([s.biases[layer] for s in subs]))
        self.intercept = float(params.intercept)
        self.n_layers = n_layers

    def to_params(self) -> NAMParams:
        p = self.arrays[0].shape[0]
        subnets = []
        for j in range(p):
            weights = [self.arrays[2 * layer][j].copy() for layer in range(self.n_layers)]
            biases = [self.arrays[2 * layer + 1][j].copy() for layer in range(self.n_layers)]
            subnets.append(MLPParams(weights=weights, biases=biases))
        return NAMParams(subnets=subnets, intercept=self.intercept)

    def contributions(self, X: np.ndarray, keep: bool = False):
        """Per-feature subnet outputs, shape (batch, p)."""
        acts = [X[:, :, None]]  # (B, p, 1)
        a = acts[0]
        for layer in range(self.n_layers):
            w = self.arrays[2 * layer]
            b = self.arrays[2 * layer + 1]
            z = np.einsum("bpi,pio->bpo", a, w) + b[None]
            a = z if layer == self.n_layers - 1 else np.maximum(z, 0.0)
            if keep:
                acts.append(a)
        contrib = a[:, :, 0]
        return (contrib, acts) if keep else contrib

    def gradients(self, X: np.ndarray, dlogit: np.ndarray):
        """Backprop ``dlogit`` (B,) into stacked parameter gradients."""
        _, acts = self.contributions(X, keep=True)
        grads: list[np.ndarray | None] = [None] * len(self.arrays)
        da = dlogit[:, None, None] * np.ones_like(acts[-1])  # (B, p, 1)
        for layer in range(self.n_layers - 1, -1, -1):
            a_prev = acts[layer]
            dz = da if layer == self.n_layers - 1 else da * (acts[layer + 1] > 0)
            grads[2 * layer] = np.einsum("bpi,bpo->pio", a_prev, dz)
            grads[2 * layer + 1] = dz.sum(axis=0)
            if layer > 0:
                da = np.einsum("bpo,pio->bpi", dz, self.arrays[2 * layer])
        dintercept = float(dlogit.sum())
        return grads, dintercept


def nam_forward(params: NAMParams, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Probability and the per-feature contribution vector for one input."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != params.n_features:
        raise DimensionMismatchError(
            f"input has {x.shape[0]} entries, model has {params.n_features} subnets"
        )
    contrib = _NamStack(params).contributions(x[None, :])[0]
    logit = params.intercept + float(contrib.sum())
    return float(expit(logit)), contrib


def nam_logits_batch(params: NAMParams, X: np.ndarray) -> np.ndarray:
    return params.intercept + _NamStack(params).contributions(np.asarray(X, dtype=float)).sum(axis=1)


def nam_contributions_batch(params: NAMParams, X: np.ndarray) -> np.ndarray:
    return _NamStack(params).contributions(np.asarray(X, dtype=float))


def mlp_proba_batch(params: MLPParams, X: np.ndarray) -> np.ndarray:
    return expit(_mlp_logits(params, np.asarray(X, dtype=float)))


def nam_proba_batch(params: NAMParams, X: np.ndarray) -> np.ndarray:
    return expit(nam_logits_batch(params, X))


def variance_estimate(p: float) -> float:
    """p (1 - p): the plug-in decision-variance proxy for sigmoid outputs."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    return p * (1.0 - p)


def nam_feature_variances(params: NAMParams, x: np.ndarray) -> np.ndarray:
    """Per-feature g_j (1 - g_j) with g_j the sigmoid of each contribution."""
    _, contrib = nam_forward(params, x)
    g = expit(contrib)
    return g * (1.0 - g)


def _bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    # softplus(z) - y z, averaged; stable in both tails
    sp = np.maximum(logits, 0.0) + np.log1p(np.exp(-np.abs(logits)))
    return float(np.mean(sp - y * logits))


def bce_loss(model, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of the model on (X, y)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if isinstance(model, NAMParams):
        logits = nam_logits_batch(model, X)
    else:
        logits = _mlp_logits(model, X)
    return _bce_from_logits(logits, y)


def _mlp_loss_grads(params: MLPParams, X: np.ndarray, y: np.ndarray):
    acts = [X]
    a = X
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
        acts.append(a)
    logits = (a @ params.weights[-1] + params.biases[-1])[:, 0]
    loss = _bce_from_logits(logits, y)
    dlogit = (expit(logits) - y) / y.shape[0]
    dW = [np.empty(0)] * len(params.weights)
    db = [np.empty(0)] * len(params.biases)
    dz = dlogit[:, None]
    for layer in range(len(params.weights) - 1, -1, -1):
        dW[layer] = acts[layer].T @ dz
        db[layer] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ params.weights[layer].T
            dz = da * (acts[layer] > 0)
    return loss, dW, db


def bce_gradients(model, X: np.ndarray, y: np.ndarray):
    """Loss and analytic gradients, shaped like the model parameters.

    For an MLP returns (loss, MLPParams-of-gradients); for a NAM returns
    (loss, NAMParams-of-gradients) whose intercept field is d loss / d b0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if isinstance(model, NAMParams):
        stack = _NamStack(model)
        logits = model.intercept + stack.contributions(X).sum(axis=1)
        loss = _bce_from_logits(logits, y)
        dlogit = (expit(logits) - y) / y.shape[0]
        grads, dintercept = stack.gradients(X, dlogit)
        gstack = _NamStack.__new__(_NamStack)
        gstack.arrays = grads
        gstack.intercept = dintercept
        gstack.n_layers = stack.n_layers
        return loss, gstack.to_params()
    loss, dW, db = _mlp_loss_grads(model, X, y)
    return loss, MLPParams(weights=dW, biases=db)


class _Adam:
    def __init__(self, shapes: list[np.ndarray], learning_rate: float):
        self.lr = learning_rate
        self.m = [np.zeros_like(a) for a in shapes]
        self.v = [np.zeros_like(a) for a in shapes]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def train(model, data: tuple[np.ndarray, np.ndarray], config: TrainConfig):
    """Adam minibatch training on binary cross-entropy; returns new parameters.

    The input model is left untouched (online callers keep it as a fallback);
    minibatch order comes from a generator seeded by ``config.seed``.
    """
    X, y = data
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("labels must be in {0, 1}")
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]

    is_nam = isinstance(model, NAMParams)
    if is_nam:
        stack = _NamStack(model)
        arrays = [a.copy() for a in stack.arrays]
        stack.arrays = arrays
        intercept_box = np.array([stack.intercept])
        flat = arrays + [intercept_box]
    else:
        weights = [w.copy() for w in model.weights]
        biases = [b.copy() for b in model.biases]
        work = MLPParams(weights=weights, biases=biases)
        flat = weights + biases

    adam = _Adam(flat, config.learning_rate)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            Xb, yb = X[idx], y[idx]
            if is_nam:
                stack.intercept = float(intercept_box[0])
                logits = stack.intercept + stack.contributions(Xb).sum(axis=1)
                loss = _bce_from_logits(logits, yb)
                dlogit = (expit(logits) - yb) / yb.shape[0]
                grads, dintercept = stack.gradients(Xb, dlogit)
                gflat = grads + [np.array([dintercept])]
            else:
                loss, dW, db = _mlp_loss_grads(work, Xb, yb)
                gflat = dW + db
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"training loss became {loss}")
            adam.step(flat, gflat)

    if is_nam:
        stack.intercept = float(intercept_box[0])
        return stack.to_params()
    return work
