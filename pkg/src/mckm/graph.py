"""q-nearest-neighbour edge set with Gaussian weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kmeans import _as_points, sq_dists

_CHUNK_ELEMS = 1 << 22


@dataclass
class WeightedEdgeGraph:
    """Weights over all node pairs, stored sparsely.

    ``edges`` lists the pairs (l1 < l2) in the symmetric q-NN union, in
    lexicographic order, with ``weights`` exp(-kappa * d^2). All other pairs
    carry weight zero; :meth:`complete` materializes the full list.
    """

    m: int
    edges: np.ndarray  # (E, 2) int
    weights: np.ndarray  # (E,)
    q: int
    kappa: float

    @property
    def n_pairs(self) -> int:
        return self.m * (self.m - 1) // 2

    def complete(self):
        """All m(m-1)/2 pairs as ``(l1, l2, w)`` arrays in upper-triangular order."""
        l1, l2 = np.triu_indices(self.m, k=1)
        w = np.zeros(l1.size)
        if len(self.edges):
            # position of pair (i, j), i < j, in row-major upper-triangular order
            i, j = self.edges[:, 0], self.edges[:, 1]
            pos = i * self.m - i * (i + 1) // 2 + (j - i - 1)
            w[pos] = self.weights
        return l1, l2, w

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.m)


def knn_indices(points, q: int) -> np.ndarray:
    """Indices of the q nearest other nodes of every node.

    Exhaustive scan; ties are broken towards the lower index.
    """
    X = _as_points(points)
    m = len(X)
    out = np.empty((m, q), dtype=np.int64)
    step = max(1, _CHUNK_ELEMS // max(1, m))
    for a in range(0, m, step):
        d = sq_dists(X[a:a + step], X)
        rows = np.arange(d.shape[0])
        d[rows, a + rows] = np.inf
        out[a:a + step] = np.argsort(d, axis=1, kind="stable")[:, :q]
    return out


def build_graph(points, q: int, kappa: float = 0.9) -> WeightedEdgeGraph:
    """Gaussian weights on the union of q-NN relations.

    ``w_ij = exp(-kappa ||x_i - x_j||^2)`` when j is among the q nearest
    neighbours of i or vice versa, and 0 otherwise.
    """
    X = _as_points(points)
    m = len(X)
    if m < 2:
        raise ValueError("a weight graph needs at least two nodes")
    if not 1 <= q <= m - 1:
        raise ValueError(f"q must lie in [1, m-1={m - 1}], got {q}")
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    nn = knn_indices(X, q)
    src = np.repeat(np.arange(m), q)
    dst = nn.ravel()
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    pairs = np.unique(np.column_stack([lo, hi]), axis=0)
    diff = X[pairs[:, 0]] - X[pairs[:, 1]]
    w = np.exp(-kappa * np.einsum("ij,ij->i", diff, diff))
    return WeightedEdgeGraph(m, pairs.astype(np.int64), w, q, float(kappa))
