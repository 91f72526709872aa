"""Reader and writer for the sparse LIBSVM text format.

Each line is ``label index:value index:value ...`` with 1-based, increasing
feature indices. Features are 0-based in memory.
"""

from pathlib import Path

import numpy as np

from .binary import MAX_FEATURES, Dataset
from .errors import LibsvmFormatError

__all__ = ["load_libsvm", "save_libsvm", "parse_libsvm"]


def parse_libsvm(lines, n_features=None) -> Dataset:
    labels = []
    rows = []
    max_index = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *items = line.split()
        try:
            label = float(head)
        except ValueError:
            raise LibsvmFormatError(f"bad label {head!r}", lineno) from None
        if label != int(label) or label < 0:
            raise LibsvmFormatError(f"label {head!r} is not a nonnegative integer", lineno)
        feats = {}
        prev = 0
        for item in items:
            idx, sep, val = item.partition(":")
            try:
                k = int(idx)
                v = float(val)
            except ValueError:
                raise LibsvmFormatError(f"bad feature {item!r}", lineno) from None
            if not sep or k < 1:
                raise LibsvmFormatError(f"bad feature {item!r}", lineno)
            if k <= prev:
                raise LibsvmFormatError(f"feature indices must increase ({item!r})", lineno)
            if k > MAX_FEATURES:
                raise LibsvmFormatError(f"feature index {k} exceeds {MAX_FEATURES}", lineno)
            prev = k
            feats[k - 1] = v
        max_index = max(max_index, prev)
        labels.append(int(label))
        rows.append(feats)
    if n_features is None:
        n_features = max_index
    elif max_index > n_features:
        raise LibsvmFormatError(f"feature index {max_index} exceeds declared dimension {n_features}")
    X = np.zeros((len(rows), n_features))
    for i, feats in enumerate(rows):
        for k, v in feats.items():
            X[i, k] = v
    return Dataset(X, np.array(labels, dtype=np.int64))


def load_libsvm(path, n_features=None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, n_features)


def save_libsvm(data: Dataset, path) -> None:
    """Write nonzero features with 17 significant digits (exact round trip)."""
    out = []
    for x, label in zip(data.X, data.y):
        nz = np.flatnonzero(x)
        out.append(" ".join([str(int(label))] + [f"{k + 1}:{x[k]:.17g}" for k in nz]))
    Path(path).write_text("\n".join(out) + ("\n" if out else ""), encoding="utf-8")
