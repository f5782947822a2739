"""Split-merge K-Means baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .kmeans import LloydResult, PrototypeSet, _as_points, _rng, kmeans, kmeanspp_seed, lloyd

# inner 2-Means restarts per candidate cluster
SPLIT_RESTARTS = 3


@dataclass
class SmkmState:
    labels: np.ndarray
    centers: np.ndarray
    cost: float
    step_log: List[Tuple[str, tuple, float]] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centers)


@dataclass
class SplitChoice:
    cluster: int
    gain: float
    sub_centers: np.ndarray  # (2, p)
    sub_labels: np.ndarray  # 0/1 per member, in member order


def _cluster_cost(Xc, v) -> float:
    d = Xc - v
    return float(np.einsum("ij,ij->", d, d))


def smkm_split_select(X, state: SmkmState, seed=None) -> Optional[SplitChoice]:
    """Cluster whose 2-Means split lowers its own cost the most.

    Clusters with fewer than two samples are skipped. Returns ``None`` when
    no cluster can be split.
    """
    X = _as_points(X)
    rng = _rng(seed)
    best = None
    for i in range(state.k):
        Xc = X[state.labels == i]
        if len(Xc) < 2:
            continue
        before = _cluster_cost(Xc, state.centers[i])
        split = None
        for _ in range(SPLIT_RESTARTS):
            r = kmeans(Xc, 2, seed=rng)
            if split is None or r.cost < split.cost:
                split = r
        gain = before - split.cost
        if best is None or gain > best.gain:
            best = SplitChoice(i, gain, split.prototypes.centers, split.labels)
    return best


def merge_increment(sizes, means, within, centers, i, c) -> Tuple[float, np.ndarray]:
    """Cost increase of merging clusters i and c at their size-weighted center.

    ``within[i]`` is cluster i's cost about its own mean; the cost about any
    other point v follows from J_C(v) = J_C(mean) + |C| ||mean - v||^2.
    """
    ni, nc = sizes[i], sizes[c]
    v = (ni * centers[i] + nc * centers[c]) / (ni + nc)

    def cost_at(j, u):
        return within[j] + sizes[j] * float(np.sum((means[j] - u) ** 2))

    merged = cost_at(i, v) + cost_at(c, v)
    return merged - cost_at(i, centers[i]) - cost_at(c, centers[c]), v


def smkm_merge_select(X, state: SmkmState):
    """Pair of clusters with the smallest merging increment.

    Returns ``(i, c, increment, merged_center)`` with ``i < c``.
    """
    X = _as_points(X)
    if state.k < 2:
        raise ValueError("merging needs at least two clusters")
    sizes = np.bincount(state.labels, minlength=state.k)
    means = np.array([X[state.labels == i].mean(axis=0) for i in range(state.k)])
    within = np.array([_cluster_cost(X[state.labels == i], means[i]) for i in range(state.k)])
    best = None
    for i in range(state.k):
        for c in range(i + 1, state.k):
            f, v = merge_increment(sizes, means, within, state.centers, i, c)
            if best is None or f < best[2]:
                best = (i, c, f, v)
    return best


def _apply_split(state: SmkmState, choice: SplitChoice) -> SmkmState:
    labels = state.labels.copy()
    members = np.flatnonzero(state.labels == choice.cluster)
    new_id = state.k
    labels[members[choice.sub_labels == 1]] = new_id
    centers = np.vstack([state.centers, choice.sub_centers[1]])
    centers[choice.cluster] = choice.sub_centers[0]
    return SmkmState(labels, centers, state.cost - choice.gain, list(state.step_log))


def _apply_merge(state: SmkmState, i: int, c: int, v: np.ndarray, f: float) -> SmkmState:
    labels = state.labels.copy()
    labels[labels == c] = i
    labels[labels > c] -= 1
    centers = np.delete(state.centers, c, axis=0)
    centers[i] = v
    return SmkmState(labels, centers, state.cost + f, list(state.step_log))


def smkm(X, k: int, seed=None, max_cycles: int = 50, init: Optional[LloydResult] = None,
         tol: float = 1e-6, max_iter: int = 300, return_state: bool = False):
    """Split-merge K-Means.

    Starts from K-Means++ + Lloyd (or ``init``), then repeats one split
    (k -> k+1), one merge (k+1 -> k) and a Lloyd refinement. A cycle is kept
    only if it lowers the cost; the first non-improving cycle ends the run.
    """
    X = _as_points(X)
    n = len(X)
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, n={n}], got {k}")
    rng = _rng(seed)
    if init is None:
        init = lloyd(X, kmeanspp_seed(X, k, rng), tol=tol, max_iter=max_iter)
    state = SmkmState(init.labels.copy(), init.prototypes.centers.copy(), init.cost)
    history = [state.cost]
    accepted = 0
    for _ in range(max_cycles):
        choice = smkm_split_select(X, state, rng)
        if choice is None:
            break
        split = _apply_split(state, choice)
        i, c, f, v = smkm_merge_select(X, split)
        merged = _apply_merge(split, i, c, v, f)
        ref = lloyd(X, merged.centers, tol=tol, max_iter=max_iter)
        if not ref.cost < state.cost:
            break
        log = state.step_log + [("split", (choice.cluster,), -choice.gain),
                                ("merge", (i, c), f)]
        state = SmkmState(ref.labels, ref.prototypes.centers, ref.cost, log)
        history.append(state.cost)
        accepted += 1
    result = LloydResult(PrototypeSet(state.centers), state.labels, state.cost, accepted, history)
    return (result, state) if return_state else result
