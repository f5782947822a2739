"""External validity indices (F*, NMI, ARI) and the K-Means cost gap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kmeans import pairwise_cost


@dataclass
class ContingencyTable:
    """``counts[i, l]`` = samples in predicted cluster i and true cluster l."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def pred_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def true_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency(truth, pred) -> ContingencyTable:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"partitions must be 1-D of equal length, got {truth.shape} and {pred.shape}")
    if truth.size == 0:
        raise ValueError("partitions are empty")
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    counts = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(counts, (p, t), 1)
    return ContingencyTable(counts)


def _same_partition(tab: ContingencyTable) -> bool:
    # identical up to relabeling iff every row and column has one nonzero cell
    nz = tab.counts > 0
    return tab.counts.shape[0] == tab.counts.shape[1] and bool(
        np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


def f_star(truth, pred) -> float:
    """Size-weighted best-match F-measure of the true clusters."""
    tab = contingency(truth, pred)
    n_hat = tab.pred_sizes[:, None]
    n_l = tab.true_sizes[None, :]
    F = 2.0 * tab.counts / (n_l + n_hat)
    return float(np.sum(tab.true_sizes / tab.n * F.max(axis=0)))


def nmi(truth, pred) -> float:
    """Mutual information over the geometric mean of the two entropies.

    If either partition has a single cluster the ratio is undefined; it is
    then 1 for identical partitions and 0 otherwise.
    """
    tab = contingency(truth, pred)
    n = tab.n
    a, b = tab.pred_sizes, tab.true_sizes
    ha = float(np.sum(a * np.log(a / n)))
    hb = float(np.sum(b * np.log(b / n)))
    if ha == 0.0 or hb == 0.0:
        return 1.0 if _same_partition(tab) else 0.0
    nz = tab.counts > 0
    i, l = np.nonzero(nz)
    c = tab.counts[nz]
    mi = float(np.sum(c * np.log(n * c / (a[i] * b[l]))))
    return mi / np.sqrt(ha * hb)


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index (pair-counting, chance corrected).

    A zero denominator (both partitions all singletons, or both a single
    cluster) gives 1 for identical partitions and 0 otherwise.
    """
    tab = contingency(truth, pred)
    n = tab.n
    if n < 2:
        raise ValueError("ARI needs at least two samples")
    index = float(np.sum(_comb2(tab.counts)))
    t = float(np.sum(_comb2(tab.pred_sizes)))
    s = float(np.sum(_comb2(tab.true_sizes)))
    expected = t * s / float(_comb2(n))
    top = 0.5 * (t + s)
    if top == expected:
        return 1.0 if _same_partition(tab) else 0.0
    return (index - expected) / (top - expected)


def cost_gap(X, truth, pred, unordered_pairs: bool = False):
    """``(J_pred, J_truth, |J_pred - J_truth|)`` with the pairwise cost form.

    ``unordered_pairs=True`` halves both costs, matching published tables
    that count each within-cluster pair once.
    """
    if truth is None:
        raise ValueError("cost gap needs ground-truth labels")
    X = getattr(X, "points", X)
    jp = pairwise_cost(X, pred, unordered_pairs)
    jt = pairwise_cost(X, truth, unordered_pairs)
    return jp, jt, abs(jp - jt)


def evaluate(truth, pred) -> dict:
    return {"f_star": f_star(truth, pred), "nmi": nmi(truth, pred), "ari": ari(truth, pred)}
