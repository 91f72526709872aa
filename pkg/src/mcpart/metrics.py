"""Scores for multi-class predictions."""

from __future__ import annotations

import numpy as np

from .errors import DataError

__all__ = [
    "confusion",
    "accuracy",
    "uncertainty_coefficient",
    "brier",
    "brier_winner",
    "format_report",
]


def confusion(pred, truth, n_classes: int) -> np.ndarray:
    """Counts with true class along rows and predicted class along columns."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise DataError(f"{pred.size} predictions for {truth.size} samples")
    for name, v in (("predicted", pred), ("true", truth)):
        if v.size and (v.min() < 0 or v.max() >= n_classes):
            raise DataError(f"{name} label out of range for {n_classes} classes")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def accuracy(cm) -> float:
    cm = np.asarray(cm)
    return float(np.trace(cm) / cm.sum())


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def uncertainty_coefficient(cm) -> float:
    """Mutual information of truth and prediction over the entropy of truth."""
    cm = np.asarray(cm, dtype=float)
    total = cm.sum()
    if total <= 0:
        raise DataError("empty confusion matrix")
    joint = cm / total
    h_true = _entropy(joint.sum(axis=1))
    if h_true == 0:
        raise DataError("uncertainty coefficient undefined: only one true class present")
    mutual = h_true + _entropy(joint.sum(axis=0)) - _entropy(joint.ravel())
    return mutual / h_true


def brier(probabilities, truth) -> float:
    """Root of the mean (over samples) summed squared error against one-hot truth."""
    P = np.asarray(probabilities, dtype=float)
    truth = np.asarray(truth, dtype=np.int64)
    if P.ndim != 2 or P.shape[0] != truth.shape[0]:
        raise DataError(f"{P.shape[0] if P.ndim else 0} probability vectors for {truth.size} samples")
    if truth.size == 0:
        raise DataError("no samples to score")
    onehot = np.zeros_like(P)
    onehot[np.arange(truth.size), truth] = 1.0
    return float(np.sqrt(((P - onehot) ** 2).sum(axis=1).mean()))


def brier_winner(winner_prob, correct) -> float:
    """Brier score on winning classes only.

    Each sample contributes the two-vector residual between
    ``(p_w, 1 - p_w)`` and ``(c, 1 - c)`` where ``c`` is 1 for a correct
    prediction, i.e. ``2 (p_w - c)^2``.
    """
    p = np.asarray(winner_prob, dtype=float)
    c = np.asarray(correct, dtype=float)
    if p.shape != c.shape:
        raise DataError("winner probabilities and correctness flags differ in length")
    if p.size == 0:
        raise DataError("no samples to score")
    return float(np.sqrt((2.0 * (p - c) ** 2).mean()))


def format_report(metrics: dict, style: str = "text") -> str:
    """``text``: aligned ``name  value`` lines; ``kv``: ``name=value`` lines."""
    if style == "kv":
        return "".join(f"{k}={_fmt(v)}\n" for k, v in metrics.items())
    width = max(map(len, metrics), default=0)
    return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in metrics.items())


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
