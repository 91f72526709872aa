"""Binary classifiers: datasets, relabeling, logistic training and calibration.

Decision values follow the convention ``r(x) ~ P(+1|x) - P(-1|x)`` so that a
logistic model gives ``r = 2 * sigmoid(z) - 1 = tanh(z / 2)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CalibrationSkipped, DataError, DegeneratePartitionError

__all__ = [
    "Dataset",
    "BinaryDataset",
    "TrainingConfig",
    "BinaryModel",
    "relabel",
    "train_logistic",
    "decide",
    "fit_calibration",
    "save_model",
    "load_model",
    "R_CLAMP",
    "MAX_FEATURES",
]

R_CLAMP = 1.0 - 1e-12
MAX_FEATURES = 10**6


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix ``X`` (n, D) with integer labels ``y``."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"{X.shape[0]} samples but {y.size} labels")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise DataError("class labels must be integers")
        y = y.astype(np.int64)
        if y.size and y.min() < 0:
            raise DataError("class labels must be nonnegative")
        n_c = self.n_classes
        if n_c is None:
            n_c = int(y.max()) + 1 if y.size else 0
        elif y.size and y.max() >= n_c:
            raise DataError(f"label {int(y.max())} out of range for {n_c} classes")
        if X.shape[1] > MAX_FEATURES:
            raise DataError(f"{X.shape[1]} features exceeds the limit of {MAX_FEATURES}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n_classes", int(n_c))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.X[index], self.y[index], self.n_classes)

    def class_samples(self, label: int) -> np.ndarray:
        return self.X[self.y == label]


@dataclass(frozen=True)
class BinaryDataset:
    X: np.ndarray
    y: np.ndarray  # -1 / +1


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.5
    epochs: int = 400
    l2: float = 1e-3
    # Full-batch descent from a zero start is deterministic; the seed is kept
    # with the model so the configuration round-trips.
    seed: int = 0


@dataclass(frozen=True)
class BinaryModel:
    weights: np.ndarray
    bias: float
    cal_scale: float = 1.0
    cal_offset: float = 0.0
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def margin(self, X) -> np.ndarray:
        """Uncalibrated linear score ``w . x + b``."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[-1]}")
        return X @ self.weights + self.bias

    def __call__(self, X):
        return decide(self, X)


def relabel(data: Dataset, row, labels=None) -> BinaryDataset:
    """Binary training set for one coding-matrix row.

    ``labels[j]`` is the class label of column ``j`` (default ``j``). Samples
    whose class is coded 0, or absent from ``labels``, are dropped.
    """
    row = np.asarray(row)
    if labels is None:
        labels = range(row.shape[0])
    code = np.zeros(max(data.n_classes, max(labels, default=-1) + 1), dtype=np.int8)
    for j, label in enumerate(labels):
        code[label] = row[j]
    z = code[data.y]
    keep = z != 0
    yb = z[keep].astype(np.int64)
    if not ((yb == 1).any() and (yb == -1).any()):
        raise DegeneratePartitionError("partition leaves only one label in the training data")
    return BinaryDataset(data.X[keep], yb)


def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def train_logistic(data: BinaryDataset, config: TrainingConfig | None = None, name: str = "") -> BinaryModel:
    """L2-regularised logistic regression by full-batch gradient descent.

    Features are standardised internally and the transform is folded back into
    the returned weights.
    """
    config = config or TrainingConfig()
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    if not ((y == 1).any() and (y == -1).any()):
        raise DegeneratePartitionError("training set needs both labels")
    mean, scale = _standardize(X)
    Z = (X - mean) / scale
    n = Z.shape[0]
    w = np.zeros(Z.shape[1])
    b = 0.0
    lr = config.learning_rate
    for _ in range(config.epochs):
        m = Z @ w + b
        # d/dm log(1 + exp(-y m)) = -y * sigmoid(-y m)
        g = -y * _sigmoid(-y * m)
        w -= lr * (Z.T @ g / n + config.l2 * w)
        b -= lr * g.mean()
    weights = w / scale
    bias = b - float(mean @ weights)
    meta = {
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "l2": config.l2,
        "seed": config.seed,
    }
    return BinaryModel(weights, float(bias), name=name, meta=meta)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def decide(model: BinaryModel, X) -> np.ndarray | float:
    """Calibrated decision value(s) in ``[-1, 1]``."""
    z = model.cal_scale * model.margin(X) + model.cal_offset
    r = np.clip(np.tanh(0.5 * z), -R_CLAMP, R_CLAMP)
    return float(r) if np.ndim(r) == 0 else r


def fit_calibration(model: BinaryModel, held_out: BinaryDataset, l2: float = 1.0, max_iter: int = 100) -> BinaryModel:
    """Refit the logistic link ``sigmoid(a * s + b)`` on held-out margins ``s``.

    The slope is L2-penalised (the intercept is not), which keeps the fit
    finite on separable scores. Scores are centred before fitting so that
    constant scores give a zero slope. A held-out set lacking either label
    leaves the model unchanged with a :class:`CalibrationSkipped` warning.
    """
    y = np.asarray(held_out.y)
    if y.size == 0 or not ((y == 1).any() and (y == -1).any()):
        warnings.warn("calibration skipped: held-out set needs both labels", CalibrationSkipped, stacklevel=2)
        return model
    s = model.margin(held_out.X)
    t = (y == 1).astype(float)
    s_mean = s.mean()
    u = s - s_mean
    F = np.column_stack([u, np.ones_like(u)])
    penalty = np.diag([l2, 0.0])
    theta = np.array([0.0, np.log(t.mean() / (1 - t.mean()))])
    for _ in range(max_iter):
        p = _sigmoid(F @ theta)
        grad = F.T @ (p - t) + penalty @ theta
        H = F.T @ (F * (p * (1 - p))[:, None]) + penalty + 1e-12 * np.eye(2)
        step = np.linalg.solve(H, grad)
        theta -= step
        if np.max(np.abs(step)) < 1e-12:
            break
    a, b0 = theta
    return replace(model, cal_scale=float(a), cal_offset=float(b0 - a * s_mean))


# --- persistence -----------------------------------------------------------
#
# One model per file, "key value" lines:
#   name <string>
#   n_features <int>
#   bias <float>
#   cal_scale <float>
#   cal_offset <float>
#   weights <float> <float> ...
#   meta.<key> <value>

_FORMAT = "mcpart-binary 1"


def save_model(model: BinaryModel, path) -> None:
    lines = [
        _FORMAT,
        f"name {model.name}",
        f"n_features {model.n_features}",
        f"bias {model.bias!r}",
        f"cal_scale {model.cal_scale!r}",
        f"cal_offset {model.cal_offset!r}",
        "weights " + " ".join(repr(float(w)) for w in model.weights),
    ]
    lines += [f"meta.{k} {v}" for k, v in sorted(model.meta.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> BinaryModel:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != _FORMAT:
        raise DataError(f"{path}: not a binary model file")
    fields = {}
    meta = {}
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        key, _, value = line.partition(" ")
        if key.startswith("meta."):
            meta[key[5:]] = value
        else:
            fields[key] = value
    try:
        weights = np.array([float(v) for v in fields["weights"].split()])
        n_features = int(fields["n_features"])
        model = BinaryModel(
            weights=weights,
            bias=float(fields["bias"]),
            cal_scale=float(fields["cal_scale"]),
            cal_offset=float(fields["cal_offset"]),
            name=fields.get("name", ""),
            meta=meta,
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file ({exc})") from exc
    if weights.shape[0] != n_features:
        raise DataError(f"{path}: expected {n_features} weights, found {weights.shape[0]}")
    return model
