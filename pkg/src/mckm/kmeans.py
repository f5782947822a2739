"""Lloyd iterations, K-Means++ seeding and the two K-Means cost forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dataset import relabel

# provenance tag for a center produced by a centroid update
CENTROID = -1

_CHUNK_ELEMS = 1 << 22


@dataclass
class PrototypeSet:
    """Prototype matrix with per-row provenance.

    ``provenance[i]`` is the sample index the center was copied from, or
    ``CENTROID`` if it came out of a centroid update.
    """

    centers: np.ndarray
    provenance: np.ndarray = None

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if self.provenance is None:
            self.provenance = np.full(len(self.centers), CENTROID, dtype=np.int64)
        else:
            self.provenance = np.asarray(self.provenance, dtype=np.int64)
        if len(self.centers) < 1 or not np.all(np.isfinite(self.centers)):
            raise ValueError("a prototype set needs at least one finite center")

    def __len__(self):
        return len(self.centers)


@dataclass
class LloydResult:
    prototypes: PrototypeSet
    labels: np.ndarray
    cost: float
    iterations: int
    cost_history: List[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.prototypes)


def _as_points(X) -> np.ndarray:
    X = getattr(X, "points", X)
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def _as_centers(C) -> np.ndarray:
    C = getattr(C, "centers", C)
    C = np.asarray(C, dtype=float)
    return C[:, None] if C.ndim == 1 else C


def sq_dists(X, C) -> np.ndarray:
    """Squared Euclidean distances between rows of X and rows of C.

    Computed from explicit differences (no norm expansion) so that ties and
    zero distances are exact; rows are processed in chunks to bound memory.
    """
    X = _as_points(X)
    C = _as_centers(C)
    if X.shape[1] != C.shape[1]:
        raise ValueError(f"dimension mismatch: points have p={X.shape[1]}, centers p={C.shape[1]}")
    n, m = len(X), len(C)
    out = np.empty((n, m))
    step = max(1, _CHUNK_ELEMS // max(1, m * X.shape[1]))
    for a in range(0, n, step):
        diff = X[a:a + step, None, :] - C[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[a:a + step])
    return out


def assign(X, C) -> np.ndarray:
    """Index of the nearest center for every sample (lowest index on ties)."""
    return np.argmin(sq_dists(X, C), axis=1)


def _centroids(X, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    centers = sums / np.maximum(counts, 1)[:, None]
    return centers, counts


def _repair_empty(X, labels, centers, counts):
    # Move each empty center onto the sample farthest from its own center.
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return centers, labels, counts
    labels = labels.copy()
    centers = centers.copy()
    counts = counts.copy()
    d = np.einsum("ij,ij->i", X - centers[labels], X - centers[labels])
    for e in empty:
        movable = counts[labels] > 1
        if not movable.any():
            break
        cand = np.where(movable, d, -np.inf)
        j = int(np.argmax(cand))
        counts[labels[j]] -= 1
        labels[j] = e
        counts[e] = 1
        centers[e] = X[j]
        d[j] = 0.0
    return centers, labels, counts


def update_centroids(X, labels, k: int) -> PrototypeSet:
    """Centroid of each cluster; empty clusters are re-seeded.

    An empty cluster's center is moved to the sample that lies farthest from
    its own cluster centroid.
    """
    X = _as_points(X)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (len(X),):
        raise ValueError("labels must cover every sample")
    centers, counts = _centroids(X, labels, k)
    centers, _, _ = _repair_empty(X, labels, centers, counts)
    return PrototypeSet(centers)


def kmeans_cost(X, C, labels) -> float:
    """Sum of squared distances from each sample to its assigned center."""
    X = _as_points(X)
    C = _as_centers(C)
    diff = X - C[np.asarray(labels)]
    return float(np.einsum("ij,ij->", diff, diff))


def pairwise_cost(X, labels, unordered_pairs: bool = False) -> float:
    """K-Means cost written through within-cluster pairwise distances.

    Evaluates ``sum_i 1/(2|C_i|) sum_{j,j' in C_i} ||x_j - x_j'||^2`` by
    direct summation. With ``unordered_pairs=True`` each pair is counted
    once (half the value), the convention behind published cost tables
    such as J* = 3.9087 for min-max scaled Iris.

    Clusters are visited in order of first appearance, so two labelings of
    the same partition give bit-identical results.
    """
    X = _as_points(X)
    labels = relabel(labels)
    total = 0.0
    for c in range(int(labels.max()) + 1):
        members = X[labels == c]
        s = float(sq_dists(members, members).sum())
        total += s / (2.0 * len(members))
    return total / 2.0 if unordered_pairs else total


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def d2_sample(d2: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index with probability proportional to ``d2``.

    Zero-weight entries are never drawn while any weight is positive.
    """
    cum = np.cumsum(d2)
    total = cum[-1]
    if not total > 0:
        raise ValueError("D^2 sampling needs a positive total weight")
    j = int(np.searchsorted(cum, rng.random() * total, side="right"))
    return min(j, len(d2) - 1)


def kmeanspp_seed(X, k: int, seed=None) -> PrototypeSet:
    """K-Means++ seeding by D^2 sampling.

    The first center is uniform over samples; each later center is drawn
    with probability D(x)^2 / sum D(x)^2. If every remaining D(x) is zero
    the next center is uniform over the samples not yet chosen.
    """
    X = _as_points(X)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n={n}], got {k}")
    rng = _rng(seed)
    idx = [int(rng.integers(n))]
    d2 = sq_dists(X, X[idx[0]][None, :])[:, 0]
    while len(idx) < k:
        if d2.sum() > 0:
            j = d2_sample(d2, rng)
        else:
            rest = np.setdiff1d(np.arange(n), idx)
            j = int(rng.choice(rest))
        idx.append(j)
        np.minimum(d2, sq_dists(X, X[j][None, :])[:, 0], out=d2)
    return PrototypeSet(X[idx].copy(), np.array(idx))


def random_seed(X, k: int, seed=None) -> PrototypeSet:
    """k distinct samples chosen uniformly at random (plain K-Means init)."""
    X = _as_points(X)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n={n}], got {k}")
    idx = _rng(seed).choice(n, size=k, replace=False)
    return PrototypeSet(X[idx].copy(), idx)


def lloyd(X, init, tol: float = 1e-6, max_iter: int = 300) -> LloydResult:
    """Lloyd's algorithm from the given initial centers.

    Stops when the assignments no longer change, when the relative cost
    decrease falls to ``tol`` or below, or after ``max_iter`` updates.
    """
    X = _as_points(X)
    C = _as_centers(init).copy()
    k = len(C)
    if k > len(X):
        raise ValueError(f"k={k} exceeds n={len(X)}")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    labels = assign(X, C)
    cost = kmeans_cost(X, C, labels)
    history = [cost]
    it = 0
    while it < max_iter:
        it += 1
        C, counts = _centroids(X, labels, k)
        C, labels_fixed, _ = _repair_empty(X, labels, C, counts)
        new = assign(X, C)
        new_cost = kmeans_cost(X, C, new)
        history.append(new_cost)
        unchanged = np.array_equal(new, labels_fixed)
        small = cost - new_cost <= tol * cost
        labels, cost = new, new_cost
        if unchanged or small:
            break
    # finalized partitions carry no empty clusters
    counts = np.bincount(labels, minlength=k)
    if (counts == 0).any():
        C, labels, _ = _repair_empty(X, labels, C, counts)
        cost = kmeans_cost(X, C, labels)
        history.append(cost)
    return LloydResult(PrototypeSet(C), labels, cost, it, history)


def kmeans(X, k: int, seed=None, init: str = "k-means++", tol: float = 1e-6,
           max_iter: int = 300) -> LloydResult:
    """Seed with ``init`` ("k-means++" or "random") and run Lloyd."""
    if init == "k-means++":
        start = kmeanspp_seed(X, k, seed)
    elif init == "random":
        start = random_seed(X, k, seed)
    else:
        raise ValueError(f"unknown init {init!r}")
    return lloyd(X, start, tol=tol, max_iter=max_iter)
