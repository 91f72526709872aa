"""Multi-class probabilities from binary decision values.

For a coding matrix ``A`` and class probabilities ``p`` each binary
classifier ideally returns::

    r_i = sum_j a_ij p_j / sum_j |a_ij| p_j

Given ``p`` on the simplex this is the linear system ``Q p = r`` with
``q_ij = a_ij + (1 - |a_ij|) r_i``. The inverse solvers below recover ``p``
from noisy ``r`` by least squares with the normalisation constraint, with or
without nonnegativity. Class decoding by voting and by column distance is also
provided, plus descent of a binary decision tree.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .coding import CodingMatrix, Split, one_vs_one, one_vs_rest
from .errors import IterationLimitWarning, SingularSystemWarning, UndefinedDecisionError

__all__ = [
    "forward",
    "build_q",
    "solve_unconstrained",
    "solve_constrained",
    "simplex_lsq",
    "kkt_residual",
    "solve_one_vs_one",
    "solve_one_vs_rest",
    "vote",
    "column_distances",
    "decode_distance",
    "solve_tree",
    "NEGATIVE_TOL",
]

NEGATIVE_TOL = 1e-9


def _matrix(A) -> np.ndarray:
    if isinstance(A, CodingMatrix):
        return A.as_float()
    return np.asarray(A, dtype=float)


def _decisions(r, n_p) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.shape[0] != n_p:
        raise ValueError(f"expected {n_p} decision values, got {r.shape[0]}")
    if not np.all(np.isfinite(r)):
        raise ValueError("decision values must be finite")
    return r


def _finish(p):
    # roundoff-level negatives are clipped; anything larger is left visible
    if p.min() < 0 and p.min() >= -NEGATIVE_TOL:
        p = np.clip(p, 0.0, None)
        p /= p.sum()
    return p


def forward(A, p) -> np.ndarray:
    """Decision values implied by class probabilities ``p``."""
    a = _matrix(A)
    p = np.asarray(p, dtype=float)
    num = a @ p
    den = np.abs(a) @ p
    if np.any(den <= 0):
        bad = int(np.flatnonzero(den <= 0)[0])
        raise UndefinedDecisionError(f"partition {bad} has zero probability on both sides")
    return num / den


def build_q(A, r) -> np.ndarray:
    a = _matrix(A)
    r = _decisions(r, a.shape[0])
    return a + (1.0 - np.abs(a)) * r[:, None]


def solve_unconstrained(A, r) -> np.ndarray:
    """Least-squares ``p`` subject only to ``sum(p) == 1``.

    The last probability is eliminated, ``p_k = 1 - sum_{j != k} p_j``, and the
    reduced system is solved in the least-squares sense. The result may have
    negative entries. A rank-deficient reduced system gives the minimum-norm
    solution and a :class:`SingularSystemWarning`.
    """
    a = _matrix(A)
    r = _decisions(r, a.shape[0])
    n_c = a.shape[1]
    if isinstance(A, CodingMatrix) and A.is_strict:
        # Q == A, so the reduced system is fixed and its factorisation cached
        x = A.reduced_pinv @ (r - a[:, -1])
        rank = A.reduced_rank
    else:
        q = build_q(a, r)
        x, _, rank, _ = np.linalg.lstsq(q[:, :-1] - q[:, -1:], r - q[:, -1], rcond=None)
    if rank < n_c - 1:
        warnings.warn(
            f"reduced system has rank {rank} < {n_c - 1}; using the minimum-norm solution",
            SingularSystemWarning,
            stacklevel=2,
        )
    return np.append(x, 1.0 - x.sum())


def _subproblem(M, b, passive):
    """Minimise ``|M z - b|`` over ``sum(z) == 1`` with ``z`` zero off ``passive``."""
    idx = np.flatnonzero(passive)
    k = idx[-1]
    z = np.zeros(M.shape[1])
    free = idx[:-1]
    if free.size:
        x, *_ = np.linalg.lstsq(M[:, free] - M[:, [k]], b - M[:, k], rcond=None)
        z[free] = x
        z[k] = 1.0 - x.sum()
    else:
        z[k] = 1.0
    return z


def simplex_lsq(M, b, max_iter: int | None = None, tol: float | None = None) -> np.ndarray:
    """Minimise ``|M p - b|^2`` subject to ``sum(p) == 1`` and ``p >= 0``.

    Active-set method in the style of Lawson and Hanson's NNLS. Starting at the
    best vertex of the simplex, variables are freed one at a time, always the
    one whose multiplier shows the largest descent. Each subproblem is solved on
    the free set with the normalisation eliminated. If the subproblem solution
    leaves the simplex, the iterate moves to the boundary point between the old
    and new solutions and the variables that hit zero are fixed again.

    A variable that is dropped straight after being freed, without any
    progress, is barred from re-entering until the iterate moves (anti-cycling).
    When ``max_iter`` (default ``3 * n``) is exhausted the current feasible
    iterate is returned with an :class:`IterationLimitWarning`.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    n = M.shape[1]
    if max_iter is None:
        max_iter = 3 * n
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.sum(M * M)), float(np.abs(M.T @ b).max(initial=0.0)))

    vertex_cost = ((M - b[:, None]) ** 2).sum(axis=0)
    j0 = int(np.argmin(vertex_cost))
    p = np.zeros(n)
    p[j0] = 1.0
    passive = np.zeros(n, dtype=bool)
    passive[j0] = True
    blocked = np.zeros(n, dtype=bool)
    it = 0
    exhausted = False

    while not passive.all():
        g = M.T @ (M @ p - b)
        lam = g[passive].mean()
        w = lam - g
        w[passive | blocked] = -np.inf
        j = int(np.argmax(w))
        if not w[j] > tol:
            break
        if it >= max_iter:
            exhausted = True
            break
        it += 1
        passive[j] = True
        entering = j

        while True:
            z = _subproblem(M, b, passive)
            neg = passive & (z <= 0)
            if not neg.any():
                p = z
                blocked[:] = False
                break
            if it >= max_iter:
                exhausted = True
                break
            it += 1
            ratios = p[neg] / (p[neg] - z[neg])
            hit = np.flatnonzero(neg)[np.argmin(ratios)]
            alpha = ratios.min()
            p = p + alpha * (z - p)
            drop = passive & (p <= tol)
            drop[hit] = True
            passive &= ~drop
            p[~passive] = 0.0
            p /= p.sum()
            moved = alpha > 1e-15
            if not moved and drop[entering]:
                blocked[entering] = True
        if exhausted:
            break

    if exhausted:
        warnings.warn(
            f"active-set iteration limit ({max_iter}) reached; returning best feasible iterate",
            IterationLimitWarning,
            stacklevel=2,
        )
    return p


def kkt_residual(M, b, p, active_tol: float = 1e-12) -> float:
    """Largest violation of the KKT conditions of :func:`simplex_lsq` at ``p``."""
    M = np.asarray(M, dtype=float)
    p = np.asarray(p, dtype=float)
    g = M.T @ (M @ p - np.asarray(b, dtype=float))
    free = p > active_tol
    lam = g[free].mean()
    stationarity = np.abs(g[free] - lam).max()
    dual = max(0.0, float((lam - g[~free]).max(initial=0.0)))
    primal = max(abs(p.sum() - 1.0), float(max(0.0, -p.min())))
    return float(max(stationarity, dual, primal))


def solve_constrained(A, r, max_iter: int | None = None) -> np.ndarray:
    """Least-squares ``p`` on the probability simplex."""
    q = build_q(A, r)
    r = np.asarray(r, dtype=float).reshape(-1)
    return _finish(simplex_lsq(q, r, max_iter=max_iter))


@lru_cache(maxsize=64)
def _ovo(n_c):
    return one_vs_one(n_c).as_float()


def solve_one_vs_one(r, n_c: int) -> np.ndarray:
    """Pairwise-coupling inverse for a one-vs-one code.

    Minimises ``|Q p|^2`` with ``q_ij = a_ij - r_i |a_ij|`` under
    ``sum(p) == 1`` through the Lagrangian linear system::

        [2 Q^T Q  1] [p     ]   [0]
        [1^T      0] [lambda] = [1]

    For one-vs-one codes the solution is nonnegative without further
    constraints. A singular system falls back to :func:`simplex_lsq` with a
    :class:`SingularSystemWarning`.
    """
    a = _ovo(int(n_c))
    r = _decisions(r, a.shape[0])
    q = a - r[:, None] * np.abs(a)
    n = a.shape[1]
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = 2.0 * q.T @ q
    K[:n, n] = 1.0
    K[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    try:
        if np.linalg.cond(K) > 1e13:
            raise np.linalg.LinAlgError("ill-conditioned")
        x = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        warnings.warn("one-vs-one system singular; using the constrained solver", SingularSystemWarning, stacklevel=2)
        return _finish(simplex_lsq(q, np.zeros(q.shape[0])))
    return _finish(x[:n])


def solve_one_vs_rest(r) -> np.ndarray:
    """Direct one-vs-rest estimate ``(r + 1) / 2`` shifted to sum to one.

    The shift is the Lagrange-multiplier correction of the least-squares fit.
    If it produces negative entries, the constrained solution is returned
    instead.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    n = r.shape[0]
    if n < 2:
        raise ValueError("need at least two decision values")
    r = _decisions(r, n)
    p = (r + 1.0) / 2.0
    p += (1.0 - p.sum()) / n
    if p.min() < -NEGATIVE_TOL:
        return solve_constrained(one_vs_rest(n), r)
    return _finish(p)


def vote(A, r) -> int:
    """Class maximising ``A^T r``; ties go to the lowest index."""
    a = _matrix(A)
    r = _decisions(r, a.shape[0])
    return int(np.argmax(a.T @ r))


def column_distances(A, r, metric: str = "euclidean") -> np.ndarray:
    """Distance from ``r`` to every column of ``A``.

    ``hamming`` snaps ``r`` to signs first (zero counts as +1) and scores each
    entry as ``(1 - a_ij s_i) / 2``, so a mismatch costs 1 and an excluded
    class costs 1/2. ``euclidean`` is the squared L2 distance.
    """
    a = _matrix(A)
    r = _decisions(r, a.shape[0])
    if metric == "hamming":
        s = np.where(r >= 0, 1.0, -1.0)
        return ((1.0 - a * s[:, None]) / 2.0).sum(axis=0)
    if metric == "euclidean":
        return ((a - r[:, None]) ** 2).sum(axis=0)
    raise ValueError(f"unknown metric {metric!r}")


def decode_distance(A, r, metric: str = "euclidean") -> int:
    return int(np.argmin(column_distances(A, r, metric)))


def solve_tree(tree, decision: Callable[[str], float] | Mapping[str, float]) -> tuple[int, float]:
    """Descend a binary tree, following the sign of each decision value.

    ``tree`` is a :class:`~mcpart.coding.Split` tree (or a pure-tree
    :class:`~mcpart.control.ControlSpec`). ``decision`` maps a node name to its
    decision value and is only called for nodes on the chosen path. Positive
    values go right with probability ``(1 + r) / 2``; otherwise left with
    ``(1 - r) / 2``. Returns the leaf label and the product of the branch
    probabilities, which is the winning class probability only.
    """
    from .control import ControlSpec, to_tree

    if isinstance(tree, ControlSpec):
        tree = to_tree(tree)
    get = decision if callable(decision) else decision.__getitem__
    node = tree
    prob = 1.0
    while isinstance(node, Split):
        r = float(get(node.name))
        if r > 0:
            prob *= (1.0 + r) / 2.0
            node = node.right
        else:
            prob *= (1.0 - r) / 2.0
            node = node.left
    return int(node), prob
