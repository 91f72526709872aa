"""Multi-class models: a control spec bound to trained binary classifiers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import solver
from .binary import (
    BinaryDataset,
    BinaryModel,
    Dataset,
    TrainingConfig,
    decide,
    fit_calibration,
    load_model,
    relabel,
    save_model,
    train_logistic,
)
from .control import ControlSpec, format_spec, parse, to_coding_matrix, to_tree
from .errors import DataError, MethodError

__all__ = [
    "METHODS",
    "MulticlassModel",
    "BatchPrediction",
    "canonical_method",
    "train_model",
    "save_model_dir",
    "load_model_dir",
]

METHODS = ("vote", "unconstrained", "constrained", "inverse", "recursive")
_ALIASES = {"1v1-inverse": "inverse", "lsq": "constrained", "inv": "inverse", "rec": "recursive"}

MANIFEST = "manifest.txt"
_MANIFEST_HEADER = "mcpart-multiclass 1"


def canonical_method(method: str) -> str:
    method = _ALIASES.get(method, method)
    if method not in METHODS:
        raise MethodError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return method


@dataclass
class BatchPrediction:
    """Predicted labels plus full probability vectors or winner probabilities.

    ``probabilities`` is ``None`` for winner-only methods (recursive) and for
    voting; ``winner_prob`` is ``None`` for voting.
    """

    labels: np.ndarray
    class_labels: tuple[int, ...]
    probabilities: np.ndarray | None = None
    winner_prob: np.ndarray | None = None
    method: str = ""


@dataclass(frozen=True)
class MulticlassModel:
    spec: ControlSpec
    binaries: dict[str, BinaryModel] = field(compare=False)
    n_features: int

    def __post_init__(self):
        missing = [n for n in self.names if n not in self.binaries]
        if missing:
            raise DataError(f"no trained model for {', '.join(missing)}")

    @cached_property
    def _flat(self):
        return to_coding_matrix(self.spec)

    @property
    def matrix(self):
        return self._flat[0]

    @property
    def names(self) -> list[str]:
        return self._flat[1]

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self._flat[2])

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def decisions(self, X) -> np.ndarray:
        """Decision values, shape ``(n_samples, n_partitions)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.column_stack([decide(self.binaries[n], X) for n in self.names])

    @cached_property
    def _ovo_map(self):
        """Row permutation and signs mapping this matrix onto ``one_vs_one``."""
        a = self.matrix.entries
        n_c = a.shape[1]
        pairs = {pair: i for i, pair in enumerate(itertools.combinations(range(n_c), 2))}
        if a.shape[0] != len(pairs):
            return None
        order = np.empty(len(pairs), dtype=np.int64)
        signs = np.empty(len(pairs))
        seen = set()
        for i, row in enumerate(a):
            nz = np.flatnonzero(row)
            if nz.size != 2:
                return None
            j, k = nz
            pos = pairs[(j, k)]
            if pos in seen:
                return None
            seen.add(pos)
            order[pos] = i
            signs[pos] = 1.0 if row[j] == -1 else -1.0
        return order, signs

    def check_method(self, method: str) -> str:
        method = canonical_method(method)
        if method == "inverse" and self._ovo_map is None:
            raise MethodError("the inverse method needs a one-vs-one partitioning")
        if method == "recursive" and not self.spec.is_tree:
            raise MethodError("the recursive method needs a pure binary-tree control spec")
        return method

    def predict(self, X, method: str = "constrained") -> BatchPrediction:
        method = self.check_method(method)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        labels = np.asarray(self.labels)
        if method == "recursive":
            tree = to_tree(self.spec)
            out_label = np.empty(X.shape[0], dtype=np.int64)
            out_prob = np.empty(X.shape[0])
            for s, x in enumerate(X):
                out_label[s], out_prob[s] = solver.solve_tree(tree, lambda name: decide(self.binaries[name], x))
            return BatchPrediction(out_label, self.labels, None, out_prob, method)

        R = self.decisions(X)
        A = self.matrix
        if method == "vote":
            idx = np.array([solver.vote(A, r) for r in R], dtype=np.int64)
            return BatchPrediction(labels[idx], self.labels, None, None, method)
        if method == "unconstrained":
            P = np.array([solver.solve_unconstrained(A, r) for r in R])
        elif method == "constrained":
            P = np.array([solver.solve_constrained(A, r) for r in R])
        else:
            order, signs = self._ovo_map
            P = np.array([solver.solve_one_vs_one(r[order] * signs, self.n_classes) for r in R])
        idx = np.argmax(P, axis=1)
        return BatchPrediction(labels[idx], self.labels, P, P[np.arange(len(idx)), idx], method)

    def predict_one(self, x, method: str = "constrained"):
        """``(label, probabilities or winner probability or None)`` for one sample."""
        out = self.predict(np.asarray(x, dtype=float)[None, :], method)
        if out.probabilities is not None:
            return int(out.labels[0]), out.probabilities[0]
        if out.winner_prob is not None:
            return int(out.labels[0]), float(out.winner_prob[0])
        return int(out.labels[0]), None


def _split_indices(y, fraction, rng):
    """Per-class random split; returns (kept, held) index arrays."""
    held = []
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        k = int(round(fraction * idx.size))
        held.extend(rng.permutation(idx)[:k])
    held = np.sort(np.array(held, dtype=np.int64))
    kept = np.setdiff1d(np.arange(y.size), held)
    return kept, held


def train_model(
    spec: ControlSpec,
    data: Dataset,
    config: TrainingConfig | None = None,
    calibrate: float = 0.0,
) -> MulticlassModel:
    """Train one logistic binary classifier per partition of ``spec``.

    With ``calibrate > 0`` that fraction of each binary training set is held
    out to refit the logistic link of the trained classifier.
    """
    config = config or TrainingConfig()
    A, names, labels = to_coding_matrix(spec)
    present = set(np.unique(data.y).tolist())
    missing = [x for x in labels if x not in present]
    if missing:
        raise DataError(f"dataset has no samples of class {', '.join(map(str, missing))}")
    extra = sorted(present - set(labels))
    if extra:
        raise DataError(f"dataset contains classes absent from the control spec: {extra}")
    binaries = {}
    for name, row in zip(names, A.entries):
        bd = relabel(data, row, labels)
        if calibrate > 0:
            rng = np.random.default_rng(config.seed)
            kept, held = _split_indices(bd.y, calibrate, rng)
            model = train_logistic(BinaryDataset(bd.X[kept], bd.y[kept]), config, name)
            model = fit_calibration(model, BinaryDataset(bd.X[held], bd.y[held]))
        else:
            model = train_logistic(bd, config, name)
        binaries[name] = model
    return MulticlassModel(spec, binaries, data.n_features)


def _model_file(directory: Path, name: str) -> Path:
    if name in (".", "..") or "/" in name or "\\" in name:
        raise DataError(f"model name {name!r} cannot be used as a file name")
    return directory / f"{name}.model"


def save_model_dir(model: MulticlassModel, directory) -> None:
    """Write a manifest plus one file per binary classifier."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    head = [
        _MANIFEST_HEADER,
        f"n_classes {model.n_classes}",
        f"n_features {model.n_features}",
        "labels " + " ".join(map(str, model.labels)),
        "spec",
    ]
    (directory / MANIFEST).write_text("\n".join(head) + "\n" + format_spec(model.spec))
    for name in model.names:
        save_model(model.binaries[name], _model_file(directory, name))


def load_model_dir(directory) -> MulticlassModel:
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.exists():
        raise DataError(f"{directory}: no {MANIFEST}")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != _MANIFEST_HEADER:
        raise DataError(f"{path}: not a model manifest")
    try:
        spec_at = lines.index("spec")
    except ValueError:
        raise DataError(f"{path}: missing spec section") from None
    header = dict(line.split(" ", 1) for line in lines[1:spec_at] if " " in line)
    spec = parse("\n".join(lines[spec_at + 1 :]))
    try:
        n_features = int(header["n_features"])
        labels = [int(x) for x in header["labels"].split()]
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed header ({exc})") from exc
    _, names, spec_labels = to_coding_matrix(spec)
    if labels != spec_labels:
        raise DataError(f"{path}: label table does not match the spec")
    binaries = {name: load_model(_model_file(directory, name)) for name in names}
    return MulticlassModel(spec, binaries, n_features)
