"""Coding matrices and binary partition trees.

A coding matrix has one row per binary partition and one column per class.
Entry ``-1`` puts the class on the negative side of the partition, ``+1`` on
the positive side and ``0`` leaves it out of that partition's training set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import CodingError, ConstructionError, SizeLimitError

__all__ = [
    "CodingMatrix",
    "InvalidCodingMatrix",
    "Split",
    "PartitionTree",
    "one_vs_rest",
    "one_vs_one",
    "exhaustive",
    "adjacent",
    "orthogonal",
    "random_code",
    "balanced_tree",
    "flatten_tree",
    "tree_leaves",
    "validate_tree",
    "EXHAUSTIVE_MAX_CLASSES",
]

EXHAUSTIVE_MAX_CLASSES = 16


class InvalidCodingMatrix(CodingError):
    pass


def _canonical_row(row):
    # sign-normalise so that a row and its negation compare equal
    nz = np.flatnonzero(row)
    if nz.size and row[nz[0]] < 0:
        row = -row
    return row.tobytes()


def check_invariants(a: np.ndarray) -> None:
    """Raise :class:`InvalidCodingMatrix` if ``a`` is not a valid coding matrix."""
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 2:
        raise InvalidCodingMatrix(f"coding matrix must be 2-D with at least 2 columns, got shape {a.shape}")
    if not np.isin(a, (-1, 0, 1)).all():
        raise InvalidCodingMatrix("entries must be -1, 0 or +1")
    for i, row in enumerate(a):
        if not ((row == -1).any() and (row == 1).any()):
            raise InvalidCodingMatrix(f"row {i} does not have two nonempty sides")
    seen = {}
    for i, row in enumerate(a):
        key = _canonical_row(row)
        if key in seen:
            raise InvalidCodingMatrix(f"row {i} duplicates row {seen[key]} (up to sign)")
        seen[key] = i
    cols = {}
    for j, col in enumerate(a.T):
        if not col.any():
            raise InvalidCodingMatrix(f"class {j} is excluded from every partition")
        key = col.tobytes()
        if key in cols:
            raise InvalidCodingMatrix(f"classes {cols[key]} and {j} are indistinguishable")
        cols[key] = j


def _is_valid(a):
    try:
        check_invariants(a)
    except InvalidCodingMatrix:
        return False
    return True


class CodingMatrix:
    """Immutable ternary matrix of shape ``(n_partitions, n_classes)``."""

    def __init__(self, entries, *, validate: bool = True):
        a = np.array(entries, dtype=np.int8, copy=True)
        if a.ndim == 1:
            a = a[None, :]
        if validate:
            check_invariants(a)
        a.setflags(write=False)
        self._a = a

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def shape(self):
        return self._a.shape

    @property
    def n_partitions(self) -> int:
        return self._a.shape[0]

    @property
    def n_classes(self) -> int:
        return self._a.shape[1]

    @cached_property
    def is_strict(self) -> bool:
        return bool(np.all(self._a != 0))

    @cached_property
    def reduced_pinv(self) -> np.ndarray:
        """Pseudo-inverse of the sum-to-one reduced system of a strict matrix.

        With the last class eliminated, a strict system does not depend on the
        decision values, so it can be factored once and reused.
        """
        a = self._a.astype(float)
        return np.linalg.pinv(a[:, :-1] - a[:, -1:])

    @cached_property
    def reduced_rank(self) -> int:
        a = self._a.astype(float)
        return int(np.linalg.matrix_rank(a[:, :-1] - a[:, -1:]))

    def as_float(self) -> np.ndarray:
        return self._a.astype(float)

    def __array__(self, dtype=None, copy=None):
        return self._a.astype(dtype) if dtype is not None else self._a.copy()

    def __eq__(self, other):
        if not isinstance(other, CodingMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self):
        return hash((self.shape, self._a.tobytes()))

    def __repr__(self):
        return f"CodingMatrix(n_partitions={self.n_partitions}, n_classes={self.n_classes})"

    def to_text(self) -> str:
        """Plain grid of ``-1 0 1`` rows, one partition per line."""
        width = 2
        return "\n".join(" ".join(f"{v:>{width}d}" for v in row) for row in self._a) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CodingMatrix":
        rows = [[int(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
        if len({len(r) for r in rows}) > 1:
            raise InvalidCodingMatrix("ragged coding matrix text")
        return cls(rows)

    def equivalent(self, other: "CodingMatrix") -> bool:
        """True if the two matrices differ only by row order and row signs."""
        if self.shape != other.shape:
            return False
        mine = sorted(_canonical_row(r) for r in self._a)
        theirs = sorted(_canonical_row(r) for r in other._a)
        return mine == theirs


def _require_classes(n_c):
    if int(n_c) != n_c or n_c < 2:
        raise CodingError(f"invalid class count {n_c!r}: need at least 2 classes")
    return int(n_c)


def one_vs_rest(n_c: int) -> CodingMatrix:
    """``a_ij = 2 delta_ij - 1``.

    With two classes the two rows are negations of each other. That matrix is
    returned as is (unvalidated) since it is what the formula gives and the
    solvers handle it; it does not survive a round trip through a control file.
    """
    n_c = _require_classes(n_c)
    return CodingMatrix(2 * np.eye(n_c, dtype=np.int8) - 1, validate=n_c > 2)


def one_vs_one(n_c: int) -> CodingMatrix:
    """One row per class pair ``(j, k)``, ``j < k``, in lexicographic order."""
    n_c = _require_classes(n_c)
    pairs = list(itertools.combinations(range(n_c), 2))
    a = np.zeros((len(pairs), n_c), dtype=np.int8)
    for i, (j, k) in enumerate(pairs):
        a[i, j] = -1
        a[i, k] = 1
    return CodingMatrix(a)


def exhaustive(n_c: int) -> CodingMatrix:
    """Every strict partition exactly once.

    Row ``m`` (counting from 1) is the binary expansion of ``m`` with set bits
    mapped to -1; the last class is always on the positive side, which is what
    removes the negated duplicates.
    """
    n_c = _require_classes(n_c)
    if n_c > EXHAUSTIVE_MAX_CLASSES:
        raise SizeLimitError(f"exhaustive code limited to {EXHAUSTIVE_MAX_CLASSES} classes, got {n_c}")
    n_rows = 2 ** (n_c - 1) - 1
    m = np.arange(1, n_rows + 1)[:, None]
    bits = (m >> np.arange(n_c - 1)[None, :]) & 1
    a = np.ones((n_rows, n_c), dtype=np.int8)
    a[:, :-1] = 1 - 2 * bits
    return CodingMatrix(a)


def adjacent(n_c: int) -> CodingMatrix:
    """Threshold splits for ordered classes: row ``i`` is ``{0..i}`` vs ``{i+1..}``."""
    n_c = _require_classes(n_c)
    i = np.arange(n_c - 1)[:, None]
    j = np.arange(n_c)[None, :]
    return CodingMatrix(np.where(j <= i, -1, 1))


def _sylvester(order: int) -> np.ndarray:
    h = np.ones((1, 1), dtype=np.int8)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def _max_strict_rows(n_c):
    return 2 ** (n_c - 1) - 1


def _max_rows(n_c):
    # ternary rows with both signs present, counted up to sign
    return (3**n_c - 2 ** (n_c + 1) + 1) // 2


def orthogonal(n_c: int, n_p: int, seed=None, *, max_tries: int = 2000) -> CodingMatrix:
    """Strict coding matrix with ``A.T @ A == n_p * I``.

    Columns are drawn from a Sylvester-Hadamard matrix of order ``n_p`` (which
    must be a power of two). Column and row sign flips preserve orthogonality
    and are used to eliminate constant rows such as the all-ones row.
    """
    n_c = _require_classes(n_c)
    n_p = int(n_p)
    if n_p < n_c:
        raise CodingError(f"orthogonal code needs n_p >= n_c, got n_p={n_p}, n_c={n_c}")
    if n_p & (n_p - 1):
        raise ConstructionError(f"no Sylvester construction with {n_p} rows (need a power of two)")
    if n_p > _max_strict_rows(n_c):
        raise ConstructionError(
            f"{n_c} classes admit only {_max_strict_rows(n_c)} distinct strict partitions, {n_p} requested"
        )
    h = _sylvester(n_p)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        cols = rng.choice(n_p, size=n_c, replace=False)
        a = h[:, cols] * rng.choice(np.array([-1, 1], dtype=np.int8), size=n_c)[None, :]
        a = a[rng.permutation(n_p)] * rng.choice(np.array([-1, 1], dtype=np.int8), size=n_p)[:, None]
        if _is_valid(a):
            return CodingMatrix(a, validate=False)
    raise ConstructionError(f"no valid {n_p}x{n_c} orthogonal code found in {max_tries} tries")


def random_code(n_c: int, n_p: int, strict: bool = True, seed=None, *, max_tries: int = 10000) -> CodingMatrix:
    """Random coding matrix; offending rows and columns are redrawn."""
    n_c = _require_classes(n_c)
    n_p = int(n_p)
    if n_p < 1:
        raise CodingError(f"need at least one partition, got {n_p}")
    limit = _max_strict_rows(n_c) if strict else _max_rows(n_c)
    if n_p > limit:
        raise ConstructionError(f"{n_c} classes admit only {limit} distinct partitions, {n_p} requested")
    # distinct nonzero columns need enough rows to tell the classes apart
    n_columns = 2**n_p if strict else 3**n_p - 1
    if n_columns < n_c:
        raise ConstructionError(f"{n_p} partitions cannot distinguish {n_c} classes")
    rng = np.random.default_rng(seed)
    values = np.array([-1, 1] if strict else [-1, 0, 1], dtype=np.int8)
    a = rng.choice(values, size=(n_p, n_c))
    for _ in range(max_tries):
        seen = set()
        bad_row = None
        for i, row in enumerate(a):
            key = _canonical_row(row)
            if not ((row == -1).any() and (row == 1).any()) or key in seen:
                bad_row = i
                break
            seen.add(key)
        if bad_row is not None:
            a[bad_row] = rng.choice(values, size=n_c)
            continue
        cols = {}
        bad_col = None
        for j, col in enumerate(a.T):
            key = col.tobytes()
            if not col.any() or key in cols:
                bad_col = j
                break
            cols[key] = j
        if bad_col is None:
            return CodingMatrix(a, validate=False)
        a[:, bad_col] = rng.choice(values, size=n_p)
    raise ConstructionError(f"no valid {n_p}x{n_c} random code found in {max_tries} redraws")


@dataclass(frozen=True)
class Split:
    """Internal node of a partition tree; leaves are plain ``int`` class labels."""

    left: "PartitionTree"
    right: "PartitionTree"
    name: str = ""


PartitionTree = Union[int, Split]


def tree_leaves(tree: PartitionTree) -> list[int]:
    """Leaf labels in left-to-right order."""
    if isinstance(tree, Split):
        return tree_leaves(tree.left) + tree_leaves(tree.right)
    return [int(tree)]


def validate_tree(tree: PartitionTree) -> list[int]:
    leaves = tree_leaves(tree)
    if len(set(leaves)) != len(leaves):
        dupes = sorted({x for x in leaves if leaves.count(x) > 1})
        raise CodingError(f"invalid tree: duplicate leaf labels {dupes}")
    if any(x < 0 for x in leaves):
        raise CodingError("invalid tree: negative class label")
    return leaves


def balanced_tree(labels) -> PartitionTree:
    """Split the label sequence in half recursively, smaller half on the left."""
    labels = list(labels)
    if not labels:
        raise CodingError("empty label list")
    if len(labels) == 1:
        return int(labels[0])
    mid = len(labels) // 2
    return Split(balanced_tree(labels[:mid]), balanced_tree(labels[mid:]))


def flatten_tree(tree: PartitionTree) -> CodingMatrix:
    """One row per internal node in pre-order: left subtree -1, right subtree +1.

    Columns follow the sorted leaf labels.
    """
    leaves = validate_tree(tree)
    if len(leaves) < 2:
        raise CodingError("invalid tree: need at least two leaves")
    column = {label: j for j, label in enumerate(sorted(leaves))}
    rows = []

    def visit(node):
        if not isinstance(node, Split):
            return
        row = np.zeros(len(leaves), dtype=np.int8)
        row[[column[x] for x in tree_leaves(node.left)]] = -1
        row[[column[x] for x in tree_leaves(node.right)]] = 1
        rows.append(row)
        visit(node.left)
        visit(node.right)

    visit(tree)
    return CodingMatrix(np.array(rows))
