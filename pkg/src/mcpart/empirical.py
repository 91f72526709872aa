"""Data-driven tree design from inter-class distances.

Two set distances are available: a centroid separation scaled by the class
spreads, and the symmetric Hausdorff distance. Classes are then merged
agglomeratively into a binary tree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .binary import Dataset
from .coding import Split, PartitionTree
from .errors import CodingError, DataError

__all__ = [
    "ClassDistanceMatrix",
    "centroid_distance",
    "centroid_set_distance",
    "hausdorff_distance",
    "class_samples",
    "distance_matrix",
    "agglomerate",
    "build_dendrogram",
    "METRICS",
    "LINKAGES",
]

METRICS = ("centroid", "hausdorff")
LINKAGES = ("single", "complete", "pooled-hausdorff")


@dataclass(frozen=True)
class ClassDistanceMatrix:
    d: np.ndarray
    metric: str
    labels: tuple[int, ...]

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (len(self.labels),) * 2:
            raise ValueError("distance matrix shape does not match labels")
        object.__setattr__(self, "d", d)


def _spread(x):
    # sqrt of the summed squared deviations, divided by (n - 1)
    mu = x.mean(axis=0)
    return mu, np.sqrt(((x - mu) ** 2).sum()) / (x.shape[0] - 1)


def centroid_set_distance(a, b) -> float:
    """``|mu_a - mu_b|^2 / sqrt(sigma_a sigma_b)``; ``inf`` if a spread is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DataError("centroid distance needs at least 2 samples per class")
    mu_a, s_a = _spread(a)
    mu_b, s_b = _spread(b)
    num = float(((mu_b - mu_a) ** 2).sum())
    den = np.sqrt(s_a * s_b)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den


def centroid_distance(data: Dataset, i: int, j: int) -> float:
    return centroid_set_distance(data.class_samples(i), data.class_samples(j))


def _directed(a, b):
    return float(cKDTree(b).query(a, k=1)[0].max())


def hausdorff_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets (Euclidean)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DataError("Hausdorff distance of an empty set")
    if a.shape[1] != b.shape[1]:
        raise DataError("point sets differ in dimension")
    return max(_directed(a, b), _directed(b, a))


def class_samples(data: Dataset, cap: int | None = 500, seed=0) -> dict[int, np.ndarray]:
    """Samples of each present class, at most ``cap`` per class (seeded draw)."""
    rng = np.random.default_rng(seed)
    out = {}
    for label in np.unique(data.y):
        x = data.class_samples(int(label))
        if cap is not None and x.shape[0] > cap:
            x = x[np.sort(rng.choice(x.shape[0], size=cap, replace=False))]
        out[int(label)] = x
    return out


def _set_distance(metric):
    if metric == "centroid":
        return centroid_set_distance
    if metric == "hausdorff":
        return hausdorff_distance
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def distance_matrix(data: Dataset, metric: str = "hausdorff", cap: int | None = 500, seed=0) -> ClassDistanceMatrix:
    dist = _set_distance(metric)
    samples = class_samples(data, cap, seed)
    labels = tuple(sorted(samples))
    n = len(labels)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = dist(samples[labels[i]], samples[labels[j]])
    return ClassDistanceMatrix(d, metric, labels)


def agglomerate(
    d: ClassDistanceMatrix,
    data: Dataset | None = None,
    linkage: str = "pooled-hausdorff",
    cap: int | None = 500,
    seed=0,
) -> tuple[PartitionTree, list[float]]:
    """Merge the two closest clusters until one remains.

    Returns the tree and the merge distances in merge order. With
    ``pooled-hausdorff`` the distance between clusters is the Hausdorff
    distance between the pooled samples of their classes (``data`` required).
    Equal distances are resolved by the smallest class label in each cluster.
    The newer cluster becomes the left child; between two original classes
    the lower label goes left.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    labels = list(d.labels)
    if len(labels) < 2:
        raise CodingError("need at least 2 classes to build a tree")
    index = {x: i for i, x in enumerate(labels)}
    samples = None
    if linkage == "pooled-hausdorff":
        if data is None:
            raise ValueError("pooled-hausdorff linkage needs the dataset")
        samples = class_samples(data, cap, seed)

    # cluster: (tree, member labels, creation step)
    clusters = [(x, [x], -1) for x in labels]
    cache = {}

    def between(ca, cb):
        key = (tuple(sorted(ca[1])), tuple(sorted(cb[1])))
        if key in cache:
            return cache[key]
        if linkage == "pooled-hausdorff" and (len(ca[1]) > 1 or len(cb[1]) > 1 or d.metric != "hausdorff"):
            value = hausdorff_distance(
                np.concatenate([samples[x] for x in ca[1]]),
                np.concatenate([samples[x] for x in cb[1]]),
            )
        else:
            pair = [d.d[index[x], index[y]] for x in ca[1] for y in cb[1]]
            value = max(pair) if linkage == "complete" else min(pair)
        cache[key] = value
        return value

    heights = []
    step = 0
    while len(clusters) > 1:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                a, b = clusters[i], clusters[j]
                lo, hi = sorted((min(a[1]), min(b[1])))
                key = (between(a, b), lo, hi)
                if best is None or key < best[0]:
                    best = (key, i, j)
        (dist, _, _), i, j = best
        a, b = clusters[i], clusters[j]
        if (b[2], -min(b[1])) > (a[2], -min(a[1])):
            a, b = b, a
        merged = (Split(a[0], b[0]), a[1] + b[1], step)
        clusters = [c for k, c in enumerate(clusters) if k not in (i, j)] + [merged]
        heights.append(float(dist))
        step += 1
    return clusters[0][0], heights


def build_dendrogram(
    d: ClassDistanceMatrix,
    data: Dataset | None = None,
    linkage: str = "pooled-hausdorff",
    cap: int | None = 500,
    seed=0,
) -> PartitionTree:
    return agglomerate(d, data, linkage, cap, seed)[0]
