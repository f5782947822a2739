"""Convex merging: sum-of-norms fusion of prototypes solved by ADMM.

The solver minimizes

    1/2 sum_i ||mu_i - v_i||^2 + gamma sum_{i<j} w_ij ||mu_i - mu_j||

with an auxiliary difference ``y_l`` and multiplier ``lambda_l`` for every
node pair ``l = (l1, l2)``. Keeping variables for all pairs makes the
mu-subproblem diagonal:

    mu = Z / (1 + m nu) + (m nu / (1 + m nu)) * mean(V)

For a zero-weight pair the y-update reduces to ``y_l = mu_l1 - mu_l2`` and
``lambda_l`` stays 0, so those pairs are carried implicitly. The iterates
are exactly those of the complete-pair scheme while the work per iteration
scales with the number of positive-weight edges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .dataset import relabel
from .graph import WeightedEdgeGraph, build_graph
from .kmeans import _as_centers, _as_points

log = logging.getLogger(__name__)


@dataclass
class CmConfig:
    gamma: float = 0.0
    nu: float = 1.0
    eta_merge: float = 1e-6
    tol: float = 1e-6
    max_iter: int = 10000

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not (self.nu > 0 and self.eta_merge > 0 and self.tol > 0):
            raise ValueError("nu, eta_merge and tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class AdmmState:
    """Solver state.

    ``y`` and ``lam`` hold the positive-weight edges of the graph in the
    order of ``graph.edges``; use :meth:`full_y` / :meth:`full_lambda` for
    the complete upper-triangular pair list.
    """

    mu: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    iter: int = 0
    converged: bool = False
    graph: Optional[WeightedEdgeGraph] = None
    history: List[Tuple[float, float]] = field(default_factory=list)

    def full_y(self) -> np.ndarray:
        l1, l2, w = self.graph.complete()
        y = self.mu[l1] - self.mu[l2]
        y[w > 0] = self.y
        return y

    def full_lambda(self) -> np.ndarray:
        l1, _, w = self.graph.complete()
        lam = np.zeros((len(l1), self.mu.shape[1]))
        lam[w > 0] = self.lam
        return lam


@dataclass
class MergeResult:
    mu: np.ndarray
    prototype_labels: np.ndarray
    k_star: int
    sample_labels: np.ndarray
    state: AdmmState
    fusion_trace: Optional[List[Tuple[float, int]]] = None


def block_soft_threshold(v, sigma):
    """Proximal map of ``sigma * ||.||_2``, applied row-wise.

    Returns ``max(0, 1 - sigma/||v||) v``; rows with ``||v|| <= sigma`` map
    to zero.
    """
    v = np.asarray(v, dtype=float)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim:
        sigma = sigma.reshape(sigma.shape + (1,))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > sigma, 1.0 - sigma / norms, 0.0)
    return scale * v


def objective(mu, V, graph: WeightedEdgeGraph, gamma: float) -> float:
    """Fidelity plus weighted sum-of-norms penalty."""
    mu = np.asarray(mu, dtype=float)
    V = _as_centers(V)
    fit = 0.5 * float(np.sum((mu - V) ** 2))
    if not len(graph.edges):
        return fit
    d = mu[graph.edges[:, 0]] - mu[graph.edges[:, 1]]
    return fit + gamma * float(np.dot(graph.weights, np.linalg.norm(d, axis=1)))


def _incidence(graph: WeightedEdgeGraph) -> sp.csr_matrix:
    E = len(graph.edges)
    rows = graph.edges.T.ravel()
    cols = np.concatenate([np.arange(E), np.arange(E)])
    vals = np.concatenate([np.ones(E), -np.ones(E)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(graph.m, E))


def initial_state(V, graph: WeightedEdgeGraph) -> AdmmState:
    V = _as_centers(V)
    mu = V.copy()
    y = mu[graph.edges[:, 0]] - mu[graph.edges[:, 1]]
    return AdmmState(mu, y, np.zeros_like(y), graph=graph)


def admm_solve(V, graph: WeightedEdgeGraph, cfg: CmConfig, warm: Optional[AdmmState] = None) -> AdmmState:
    """Solve the fusion problem for prototypes ``V`` on ``graph``.

    Starts from ``mu = V``, ``y = mu`` differences and ``lambda = 0`` unless
    a ``warm`` state on the same graph is given. Stops once the primal
    residual ``sqrt(sum ||y_l - mu_l1 + mu_l2||^2)`` and the dual residual
    ``nu * sqrt(sum ||y_l^{t+1} - y_l^t||^2)`` (both over all pairs) are at
    most ``cfg.tol``; otherwise returns after ``cfg.max_iter`` iterations
    with ``converged=False``.
    """
    V = _as_centers(V)
    m = len(V)
    if graph.m != m:
        raise ValueError(f"graph has {graph.m} nodes but {m} prototypes were given")
    nu = cfg.nu
    c = m * nu
    Vbar = V.mean(axis=0)
    B = _incidence(graph)
    Bt = B.T.tocsr()
    sigma = cfg.gamma * graph.weights / nu

    st = initial_state(V, graph) if warm is None else warm
    mu, y, lam = st.mu.copy(), st.y.copy(), st.lam.copy()
    history: List[Tuple[float, float]] = []
    primal = dual = np.inf
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        Dmu = Bt @ mu
        z = V + B @ (lam + nu * (y - Dmu)) + c * (mu - mu.mean(axis=0))
        mu_new = z / (1.0 + c) + (c / (1.0 + c)) * Vbar
        Dn = Bt @ mu_new
        y_new = block_soft_threshold(Dn - lam / nu, sigma)
        r = y_new - Dn
        lam += nu * r
        primal = float(np.sqrt(np.sum(r * r)))
        # y changes on zero-weight pairs are the pairwise differences of delta;
        # sum over all pairs of ||delta_i - delta_j||^2 = m * sum ||delta_i - mean||^2
        delta = mu_new - mu
        dE = Bt @ delta
        dall = m * float(np.sum((delta - delta.mean(axis=0)) ** 2))
        dzero = max(dall - float(np.sum(dE * dE)), 0.0)
        dy = y_new - y
        dual = nu * float(np.sqrt(np.sum(dy * dy) + dzero))
        mu, y = mu_new, y_new
        history.append((primal, dual))
        if primal <= cfg.tol and dual <= cfg.tol:
            converged = True
            break
    if not converged:
        log.warning("ADMM stopped at max_iter=%d (primal %.3g, dual %.3g)", cfg.max_iter, primal, dual)
    return AdmmState(mu, y, lam, primal, dual, it, converged, graph, history)


def extract_clusters(mu, eta_merge: float = 1e-6) -> Tuple[np.ndarray, int]:
    """Connected components of the graph linking rows within ``eta_merge``."""
    mu = getattr(mu, "mu", mu)
    mu = np.asarray(mu, dtype=float)
    m = len(mu)
    pairs = cKDTree(mu).query_pairs(eta_merge, output_type="ndarray")
    adj = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)) \
        if len(pairs) else sp.coo_matrix((m, m))
    k, comp = connected_components(adj, directed=False)
    return relabel(comp), int(k)


def propagate_labels(mps_labels, proto_labels) -> np.ndarray:
    """Sample label = merged cluster of the sample's prototype."""
    mps_labels = np.asarray(mps_labels, dtype=np.int64)
    proto_labels = np.asarray(proto_labels, dtype=np.int64)
    if mps_labels.size and (mps_labels.min() < 0 or mps_labels.max() >= len(proto_labels)):
        raise RuntimeError("sample assigned to a prototype id outside the merged partition")
    return proto_labels[mps_labels]


def convex_merge(V, mps_labels, graph: WeightedEdgeGraph, cfg: CmConfig,
                 warm: Optional[AdmmState] = None) -> MergeResult:
    """Fuse prototypes, extract merged clusters and relabel the samples."""
    st = admm_solve(V, graph, cfg, warm)
    plab, k = extract_clusters(st.mu, cfg.eta_merge)
    return MergeResult(st.mu, plab, k, propagate_labels(mps_labels, plab), st)


def gamma_path(V, graph: WeightedEdgeGraph, cfg: CmConfig, gammas: Sequence[float]):
    """Warm-started solves over ascending ``gammas``.

    Returns a list of ``(gamma, k_star, mu)`` triples.
    """
    gammas = [float(g) for g in gammas]
    if any(g < 0 for g in gammas) or any(b < a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gammas must be non-negative and ascending")
    out = []
    st = None
    for g in gammas:
        st = admm_solve(V, graph, replace(cfg, gamma=g), warm=st)
        _, k = extract_clusters(st.mu, cfg.eta_merge)
        out.append((g, k, st.mu.copy()))
    return out


def convex_cluster(X, q: int = 5, kappa: float = 0.9, cfg: Optional[CmConfig] = None) -> MergeResult:
    """Plain convex clustering: the fusion problem with every sample a node."""
    X = _as_points(X)
    cfg = cfg or CmConfig()
    graph = build_graph(X, q, kappa)
    return convex_merge(X, np.arange(len(X)), graph, cfg)
