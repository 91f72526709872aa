"""Train/test splitting and repeated-trial evaluation."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .binary import Dataset, TrainingConfig
from .control import ControlSpec
from .errors import DataError
from .metrics import accuracy, brier, brier_winner, confusion, uncertainty_coefficient
from .model import BatchPrediction, MulticlassModel, train_model

__all__ = ["stratified_split", "score", "run_trials"]


def stratified_split(y, holdout: float, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Indices ``(train, test)`` holding out ``holdout`` of every class."""
    if not 0.0 < holdout < 1.0:
        raise ValueError("holdout fraction must lie in (0, 1)")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    test = []
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        k = int(round(holdout * idx.size))
        if k == 0 or k == idx.size:
            raise DataError(f"class {label} too small for a {holdout:g} holdout")
        test.append(rng.permutation(idx)[:k])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(y.size), test)
    return train, test


def score(pred: BatchPrediction, truth) -> dict[str, float]:
    """Accuracy, uncertainty coefficient and the Brier scores a prediction supports."""
    index = {label: i for i, label in enumerate(pred.class_labels)}
    try:
        t = np.array([index[int(v)] for v in truth], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"true class {exc.args[0]} is not among the predicted classes") from None
    e = np.array([index[int(v)] for v in pred.labels], dtype=np.int64)
    cm = confusion(e, t, len(index))
    out = {"n": int(t.size), "accuracy": accuracy(cm), "uncertainty": uncertainty_coefficient(cm)}
    if pred.probabilities is not None:
        out["brier"] = brier(pred.probabilities, t)
    if pred.winner_prob is not None:
        out["brier_winner"] = brier_winner(pred.winner_prob, e == t)
    return out


def run_trials(
    spec: ControlSpec | Callable[[Dataset], ControlSpec],
    data: Dataset,
    methods=("constrained",),
    holdout: float = 0.3,
    trials: int = 10,
    seed: int = 0,
    config: TrainingConfig | None = None,
) -> list[dict[str, dict[str, float]]]:
    """Train on stratified splits and score each method per trial.

    ``spec`` may be a callable building the spec from the training split, as
    for data-driven trees. Returns one ``{method: metrics}`` dict per trial.
    """
    seeds = np.random.SeedSequence(seed).spawn(trials)
    results = []
    for ss in seeds:
        train, test = stratified_split(data.y, holdout, np.random.default_rng(ss))
        train_set, test_set = data.subset(train), data.subset(test)
        s = spec(train_set) if callable(spec) else spec
        model: MulticlassModel = train_model(s, train_set, config)
        results.append({m: score(model.predict(test_set.X, m), test_set.y) for m in methods})
    return results
