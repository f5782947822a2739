"""Multi-prototypes sampling.

Prototypes are grown one at a time by D^2 sampling until the relative
drop of the reconstruction error falls to a threshold, then refined with
Lloyd iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .kmeans import (PrototypeSet, _as_points, _rng, assign, d2_sample, kmeans,
                     kmeans_cost, lloyd, sq_dists)


@dataclass
class MpsConfig:
    rho: float = 1.0
    epsilon: Optional[float] = None  # overrides the rho rule when set
    seed: object = None
    drop_last: bool = False
    lloyd_tol: float = 1e-6
    lloyd_max_iter: int = 300

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass
class MpsResult:
    prototypes: PrototypeSet
    labels: np.ndarray
    s_star: int
    epsilon: float
    trace: List[Tuple[int, float]]  # (s, R(s)) along the sampling loop
    sampled: np.ndarray  # sample indices kept as the initial prototypes
    cost: float
    lloyd_iterations: int = 0
    rates: List[float] = field(default_factory=list)


def reconstruction(X, V) -> float:
    """Sum over samples of the squared distance to the nearest prototype."""
    return float(sq_dists(X, V).min(axis=1).sum())


def epsilon_from_rho(n: int, p: int, rho: float) -> float:
    """Stopping threshold ``1 / (rho * sqrt(n * p))``."""
    if n < 1 or p < 1 or not rho > 0:
        raise ValueError("need n >= 1, p >= 1 and rho > 0")
    return 1.0 / (rho * math.sqrt(n * p))


def sample_prototypes(X, epsilon: float, seed=None, drop_last: bool = False):
    """The sampling loop alone, without Lloyd refinement.

    Returns ``(indices, trace, rates)`` where ``trace`` holds ``(s, R(s))``
    for every prototype count visited and ``rates`` the relative
    reconstruction rates ``(R(s-1) - R(s)) / R(s-1)`` for s >= 2.
    """
    X = _as_points(X)
    n = len(X)
    rng = _rng(seed)
    idx = [int(rng.integers(n))]
    d2 = sq_dists(X, X[idx[0]][None, :])[:, 0]
    R = float(d2.sum())
    trace = [(1, R)]
    rates: List[float] = []
    s = 2
    while s <= n and R > 0:
        j = d2_sample(d2, rng)
        idx.append(j)
        np.minimum(d2, sq_dists(X, X[j][None, :])[:, 0], out=d2)
        Rs = float(d2.sum())
        trace.append((s, Rs))
        rate = (R - Rs) / R
        rates.append(rate)
        if Rs == 0:
            break
        if rate <= epsilon:
            if drop_last:
                idx.pop()
            break
        R = Rs
        s += 1
    return np.array(idx, dtype=np.int64), trace, rates


def mps(X, cfg: Optional[MpsConfig] = None, **kwargs) -> MpsResult:
    """Run multi-prototypes sampling followed by Lloyd refinement.

    Keyword arguments are forwarded to :class:`MpsConfig` when ``cfg`` is
    omitted, so ``mps(X, rho=0.8, seed=3)`` works.
    """
    if cfg is None:
        cfg = MpsConfig(**kwargs)
    elif kwargs:
        raise TypeError("pass either cfg or keyword options, not both")
    X = _as_points(X)
    n, p = X.shape
    if n < 2:
        raise ValueError("multi-prototypes sampling needs n >= 2")
    eps = cfg.epsilon if cfg.epsilon is not None else epsilon_from_rho(n, p, cfg.rho)
    idx, trace, rates = sample_prototypes(X, eps, cfg.seed, cfg.drop_last)
    res = lloyd(X, PrototypeSet(X[idx].copy(), idx), tol=cfg.lloyd_tol, max_iter=cfg.lloyd_max_iter)
    return MpsResult(
        prototypes=res.prototypes,
        labels=res.labels,
        s_star=len(res.prototypes),
        epsilon=eps,
        trace=trace,
        sampled=idx,
        cost=res.cost,
        lloyd_iterations=res.iterations,
        rates=rates,
    )


@dataclass
class BoundReport:
    """Empirical check of the expected-cost bound for sampled prototypes.

    ``holds`` compares the mean cost over trials with the mean right-hand
    side. This is a Monte-Carlo observation, not a proof; ``j_opt`` is a
    proxy for the unobservable optimum (see ``reference``).
    """

    epsilon: float
    j_x: List[float]
    j_opt: float
    reference: str
    n_a: List[int]
    delta: List[float]
    rhs: List[float]
    mean_j_x: float
    mean_rhs: float
    holds: bool
    vacuous: bool


def _optimal_reference(X, labels, s_star, reference, restarts, seed):
    if reference == "labels":
        if labels is None:
            raise ValueError("reference='labels' needs ground-truth labels")
        k = int(labels.max()) + 1
        C = np.array([X[labels == c].mean(axis=0) for c in range(k)])
        return kmeans_cost(X, C, labels), C, np.asarray(labels)
    if reference == "restarts":
        rng = np.random.default_rng(seed)
        best = None
        for _ in range(restarts):
            r = kmeans(X, s_star, seed=rng)
            if best is None or r.cost < best.cost:
                best = r
        return best.cost, best.prototypes.centers, best.labels
    raise ValueError(f"unknown reference {reference!r}")


def check_expected_cost_bound(X, results: Union[MpsResult, Sequence[MpsResult]], epsilon: Optional[float] = None,
                         labels=None, reference: str = "auto", restarts: int = 50,
                         seed=0) -> BoundReport:
    """Check ``E[J] <= 2(1-eps)(3 J_opt + 2 n_a Delta)`` over MPS trials.

    For every trial, J is the K-Means cost at the refined MPS prototypes,
    ``n_a`` counts samples whose prototype is at least as far from their
    optimal prototype as the sample itself, and ``Delta = eps * J``. The
    optimum is proxied by the ground-truth partition cost when labels are
    available (``reference="labels"``) or else by the best of ``restarts``
    K-Means++ runs at k = s* (``reference="restarts"``).
    """
    labels = getattr(X, "labels", None) if labels is None else np.asarray(labels)
    X = _as_points(X)
    if isinstance(results, MpsResult):
        results = [results]
    results = list(results)
    if epsilon is None:
        epsilon = results[0].epsilon
    if reference == "auto":
        reference = "labels" if labels is not None else "restarts"
    s_ref = max(r.s_star for r in results)
    j_opt, C_opt, lab_opt = _optimal_reference(X, labels, s_ref, reference, restarts, seed)
    v_star = C_opt[lab_opt]
    own = np.linalg.norm(X - v_star, axis=1)
    j_x, n_a, delta, rhs = [], [], [], []
    for r in results:
        v = r.prototypes.centers[r.labels]
        J = kmeans_cost(X, r.prototypes, r.labels)
        na = int(np.count_nonzero(np.linalg.norm(v - v_star, axis=1) >= own))
        d = epsilon * J
        j_x.append(J)
        n_a.append(na)
        delta.append(d)
        rhs.append(2.0 * (1.0 - epsilon) * (3.0 * j_opt + 2.0 * na * d))
    mean_j, mean_rhs = float(np.mean(j_x)), float(np.mean(rhs))
    vacuous = epsilon >= 1.0 or mean_rhs <= 0.0
    return BoundReport(epsilon, j_x, j_opt, reference, n_a, delta, rhs, mean_j, mean_rhs,
                       holds=bool(mean_j <= mean_rhs), vacuous=bool(vacuous))
