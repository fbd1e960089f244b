"""Dataset ingestion, stream splitting, and the synthetic generator.

Input files are headered CSVs with numeric cells. The phishing corpus this
targets encodes features in {-1, 0, 1} and labels in {-1, 1}; the default
label mapping sends -1 to 0 and 1 to 1. No standardization is applied unless
asked for, since the raw values are already bounded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    InsufficientRowsError,
    MissingColumnError,
    ParseError,
    UnknownLabelValueError,
)

DEFAULT_LABEL_MAPPING = {-1.0: 0, 1.0: 1}


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class StreamSplit:
    """Product of split_stream: initial window, stream batches, held-out test."""

    initial_X: np.ndarray
    initial_y: np.ndarray
    batches: list[tuple[np.ndarray, np.ndarray]]
    test_X: np.ndarray
    test_y: np.ndarray

    @property
    def n_train_total(self) -> int:
        return self.initial_X.shape[0] + sum(xb.shape[0] for xb, _ in self.batches)


def load_dataset(
    path,
    label_column: int | str = -1,
    label_mapping: dict | None = None,
    drop_columns: tuple[str, ...] = (),
) -> Dataset:
    """Load a headered numeric CSV; every non-label column becomes a feature.

    ``label_column`` is a header name or a (possibly negative) column index.
    Labels go through ``label_mapping`` (default {-1: 0, 1: 1}).
    """
    mapping = DEFAULT_LABEL_MAPPING if label_mapping is None else {
        float(k): int(v) for k, v in label_mapping.items()
    }
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", row=1, column=1) from None
        header = [h.strip() for h in header]
        if isinstance(label_column, str):
            if label_column not in header:
                raise MissingColumnError(f"no column named {label_column!r} in {header}")
            label_idx = header.index(label_column)
        else:
            label_idx = label_column % len(header)
        dropped = {header.index(c) for c in drop_columns if c in header}
        dropped.discard(label_idx)
        feat_idx = [i for i in range(len(header)) if i != label_idx and i not in dropped]

        rows: list[list[float]] = []
        labels: list[int] = []
        for r, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, found {len(record)}", row=r, column=1
                )
            parsed = []
            for i in feat_idx + [label_idx]:
                cell = record[i].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric cell {cell!r}", row=r, column=i + 1) from None
                if not math.isfinite(value):
                    raise ParseError(f"non-finite cell {cell!r}", row=r, column=i + 1)
                parsed.append(value)
            raw_label = parsed.pop()
            if raw_label not in mapping:
                raise UnknownLabelValueError(
                    f"label value {raw_label!r} at row {r} not in mapping {sorted(mapping)}"
                )
            rows.append(parsed)
            labels.append(mapping[raw_label])
    if not rows:
        raise InsufficientRowsError(f"{path} contains no data rows")
    return Dataset(
        features=np.array(rows, dtype=float),
        labels=np.array(labels, dtype=int),
        feature_names=[header[i] for i in feat_idx],
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back out with {-1, 1} labels (round-trips the loader)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.feature_names, "Result"])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([*(repr(v) for v in x), 1 if y == 1 else -1])


def split_stream(
    dataset: Dataset,
    test_fraction: float,
    initial_fraction: float,
    batch_range: tuple[int, int],
    rng: np.random.Generator,
) -> StreamSplit:
    """Shuffle, carve off the test set, then the initial window, then batches.

    Batch sizes are drawn uniformly from ``batch_range`` (inclusive); the last
    batch may be smaller.
    """
    if not (0 < test_fraction < 1 and 0 < initial_fraction < 1):
        raise InsufficientRowsError("fractions must lie in (0, 1)")
    if test_fraction + initial_fraction >= 1:
        raise InsufficientRowsError("test and initial fractions must sum below 1")
    lo, hi = batch_range
    if lo < 1 or hi < lo:
        raise InsufficientRowsError(f"bad batch size range ({lo}, {hi})")
    n = dataset.n_rows
    n_test = int(test_fraction * n)
    n_initial = int(initial_fraction * (n - n_test))
    n_stream = n - n_test - n_initial
    if n_test == 0 or n_initial == 0 or n_stream <= 0:
        raise InsufficientRowsError(
            f"split of {n} rows leaves test={n_test}, initial={n_initial}, stream={n_stream}"
        )
    perm = rng.permutation(n)
    X, y = dataset.features[perm], dataset.labels[perm]
    test_X, test_y = X[:n_test], y[:n_test]
    initial_X, initial_y = X[n_test : n_test + n_initial], y[n_test : n_test + n_initial]
    batches = []
    start = n_test + n_initial
    while start < n:
        size = int(rng.integers(lo, hi + 1))
        stop = min(start + size, n)
        batches.append((X[start:stop], y[start:stop]))
        start = stop
    return StreamSplit(
        initial_X=initial_X,
        initial_y=initial_y,
        batches=batches,
        test_X=test_X,
        test_y=test_y,
    )


def standardize_split(split: StreamSplit) -> StreamSplit:
    """Z-score every part using initial-window statistics only (no test leakage)."""
    mean = split.initial_X.mean(axis=0)
    std = split.initial_X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)

    def tf(X):
        return (X - mean) / std

    return replace(
        split,
        initial_X=tf(split.initial_X),
        batches=[(tf(xb), yb) for xb, yb in split.batches],
        test_X=tf(split.test_X),
    )


def make_synthetic(n: int, p: int, seed: int = 0) -> Dataset:
    """Additive-ground-truth binary dataset for tests and demos.

    Each feature contributes a smooth 1-D effect with decaying weight; the
    last quarter of the features carry no signal at all. Labels are Bernoulli
    draws through a sigmoid of the additive latent.
    """
    if n < 4 or p < 1:
        raise InsufficientRowsError(f"synthetic dataset needs n >= 4 and p >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.0, 2.0, size=(n, p))
    latent = np.full(n, -0.2)
    n_noise = p // 4
    shapes = (
        lambda v, a, b: np.sin(a * v + b),
        lambda v, a, b: np.tanh(a * v + b),
        lambda v, a, b: 0.5 * (v - b) ** 2 - 1.0,
    )
    for j in range(p - n_noise):
        weight = 2.5 * 0.8**j
        a = rng.uniform(0.8, 1.6)
        b = rng.uniform(-0.5, 0.5)
        latent += weight * shapes[j % len(shapes)](X[:, j], a, b)
    prob = 1.0 / (1.0 + np.exp(-1.5 * latent))
    labels = (rng.random(n) < prob).astype(int)
    names = [f"f{j:02d}" for j in range(p)]
    return Dataset(features=X, labels=labels, feature_names=names)
