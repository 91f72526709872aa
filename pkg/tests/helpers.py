"""Shared test helpers and brute-force oracles."""

import functools
import itertools

import numpy as np

from mcpart.binary import Dataset

BLOB_MEANS = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])


def make_blobs(n_per_class, means=BLOB_MEANS, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    means = np.asarray(means, dtype=float)
    y = np.repeat(np.arange(len(means)), n_per_class)
    X = means[y] + scale * rng.normal(size=(y.size, means.shape[1]))
    return Dataset(X, y)


def _row_key(row):
    nz = np.flatnonzero(row)
    return tuple(-row if row[nz[0]] < 0 else row)


def permutation_equivalent(a, b):
    """True if ``b`` equals ``a`` after some column permutation, row reordering and row sign flips."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    target = sorted(_row_key(r) for r in b)
    return any(
        sorted(_row_key(r) for r in a[:, list(perm)]) == target
        for perm in itertools.permutations(range(a.shape[1]))
    )


@functools.lru_cache(maxsize=8)
def simplex_grid(n, step):
    """All points of the probability simplex in ``n`` dimensions on a grid of ``step``."""
    m = int(round(1.0 / step))
    g = np.zeros((1, 0), dtype=np.int64)
    for _ in range(n - 1):
        # extend every partial point by each admissible next coordinate
        room = m - g.sum(axis=1)
        base = np.repeat(g, room + 1, axis=0)
        nxt = np.concatenate([np.arange(k + 1) for k in room])
        g = np.column_stack([base, nxt])
    full = np.column_stack([g, m - g.sum(axis=1)]) / m
    full.setflags(write=False)
    return full


def grid_minimizer(M, b, step):
    """Brute-force argmin of ``|M p - b|^2`` over the simplex grid."""
    grid = simplex_grid(M.shape[1], step)
    # |Mp - b|^2 up to a constant, without forming M p for every point
    cost = np.einsum("ij,jk,ik->i", grid, M.T @ M, grid) - 2.0 * grid @ (M.T @ b)
    return grid[np.argmin(cost)]
