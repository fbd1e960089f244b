"""Evaluation metrics: ROC/AUC, F1, accuracy, importance histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, IndexOutOfRangeError, SingleClassError


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by FPR; starts at (0, 0) and ends at (1, 1)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_and_auc(scores: np.ndarray, labels: np.ndarray) -> tuple[RocCurve, float]:
    """ROC over all distinct score thresholds plus sentinels, AUC by trapezoid.

    Tied scores share a threshold, so ties between classes contribute half,
    matching the Mann-Whitney pairwise formulation exactly.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise DimensionMismatchError(f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    n_pos = float(np.sum(labels == 1))
    n_neg = float(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = (labels[order] == 1).astype(float)
    tp = np.cumsum(pos)
    fp = np.cumsum(1.0 - pos)
    # last index of each run of equal scores = the operating point at that threshold
    distinct = np.nonzero(np.diff(s))[0]
    cut = np.concatenate([distinct, [s.size - 1]])
    tpr = np.concatenate([[0.0], tp[cut] / n_pos, [1.0]])
    fpr = np.concatenate([[0.0], fp[cut] / n_neg, [1.0]])
    thresholds = np.concatenate([[np.inf], s[cut], [-np.inf]])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds), auc


def f1_score(probabilities: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """F1 of thresholded probabilities; 0 when precision + recall is 0."""
    probabilities = np.asarray(probabilities, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    pred = probabilities >= threshold
    actual = labels == 1
    tp = float(np.sum(pred & actual))
    fp = float(np.sum(pred & ~actual))
    fn = float(np.sum(~pred & actual))
    denom = 2.0 * tp + fp + fn
    if denom == 0.0:
        return 0.0
    return 2.0 * tp / denom


def accuracy(probabilities: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    probabilities = np.asarray(probabilities, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    return float(np.mean((probabilities >= threshold) == (labels == 1)))


def importance_histogram(picks, p: int) -> np.ndarray:
    """Percentage of times each feature index appears in ``picks``.

    Sums to 100 (empty input gives all zeros).
    """
    picks = np.asarray(list(picks), dtype=int)
    if picks.size and (picks.min() < 0 or picks.max() >= p):
        bad = picks[(picks < 0) | (picks >= p)][0]
        raise IndexOutOfRangeError(f"pick {bad} out of range for p={p}")
    counts = np.bincount(picks, minlength=p).astype(float)
    if picks.size == 0:
        return counts
    return 100.0 * counts / picks.size


def histogram_entropy(percentages: np.ndarray) -> float:
    """Shannon entropy (nats) of a percentage histogram; zero bins are skipped."""
    q = np.asarray(percentages, dtype=float) / 100.0
    q = q[q > 0]
    if q.size == 0:
        return 0.0
    return float(-np.sum(q * np.log(q)))
