"""MCKM composition and a uniform interface over all algorithms.

Seeds: a run seed is handed unchanged to every algorithm, so baselines that
start with a uniform sample pick the same first point. Trial ``t`` of a
sweep with base seed ``b`` uses seed ``b + t``.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .cm import AdmmState, CmConfig, MergeResult, convex_cluster, convex_merge
from .dataset import Dataset
from .graph import build_graph
from .kmeans import kmeans, pairwise_cost
from .metrics import cost_gap, evaluate
from .mps import MpsConfig, MpsResult, mps
from .smkm import smkm

ALGORITHMS = ("kmeans", "kmeanspp", "smkm", "cc", "mckm")

DEFAULTS: Dict[str, dict] = {
    "kmeans": {"k": None, "tol": 1e-6, "max_iter": 300},
    "kmeanspp": {"k": None, "tol": 1e-6, "max_iter": 300},
    "smkm": {"k": None, "max_cycles": 50},
    "cc": {"gamma": None, "q": 5, "kappa": 0.9, "nu": 1.0, "eta": 1e-6, "tol": 1e-6,
           "max_iter": 10000},
    "mckm": {"rho": 1.0, "epsilon": None, "drop_last": False, "gamma": None, "q": 2,
             "kappa": 0.9, "nu": 1.0, "eta": 1e-6, "tol": 1e-6, "max_iter": 10000},
}

TIMING_KEYS = ("runtime_seconds", "timings")


class UsageError(ValueError):
    """Bad algorithm name or parameters."""


@dataclass
class AlgorithmSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = 0

    def resolved(self) -> dict:
        """Parameters with defaults filled in, validated."""
        if self.name not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.name!r}; choose from {', '.join(ALGORITHMS)}")
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise UsageError(f"{self.name}: unknown parameters {sorted(unknown)}")
        p = {**DEFAULTS[self.name], **{k: v for k, v in self.params.items() if v is not None}}
        missing = [k for k, v in p.items() if v is None and k != "epsilon"]
        if missing:
            raise UsageError(f"{self.name}: missing required parameters {missing}")
        if "k" in p and int(p["k"]) < 1:
            raise UsageError("k must be >= 1")
        if "gamma" in p and p["gamma"] < 0:
            raise UsageError("gamma must be >= 0")
        if "q" in p and int(p["q"]) < 1:
            raise UsageError("q must be >= 1")
        for key in ("kappa", "nu", "eta", "tol", "rho"):
            if key in p and not p[key] > 0:
                raise UsageError(f"{key} must be positive")
        return p


@dataclass
class MckmResult:
    mps: MpsResult
    merge: MergeResult
    q_used: int
    timings: Dict[str, float]

    @property
    def labels(self) -> np.ndarray:
        return self.merge.sample_labels

    @property
    def k_star(self) -> int:
        return self.merge.k_star

    @property
    def s_star(self) -> int:
        return self.mps.s_star


def mckm(X, rho: float = 1.0, gamma: float = 0.1, q: int = 2, kappa: float = 0.9,
         nu: float = 1.0, eta: float = 1e-6, tol: float = 1e-6, max_iter: int = 10000,
         epsilon: Optional[float] = None, drop_last: bool = False, seed=None) -> MckmResult:
    """Multi-prototypes sampling followed by convex merging.

    ``q`` is capped at s* - 1 when MPS returns fewer than q + 1 prototypes.
    """
    X = getattr(X, "points", X)
    t0 = time.perf_counter()
    m = mps(X, MpsConfig(rho=rho, epsilon=epsilon, seed=seed, drop_last=drop_last))
    t1 = time.perf_counter()
    V = m.prototypes.centers
    cfg = CmConfig(gamma=gamma, nu=nu, eta_merge=eta, tol=tol, max_iter=max_iter)
    if m.s_star == 1:
        st = AdmmState(V.copy(), np.zeros((0, V.shape[1])), np.zeros((0, V.shape[1])), 0.0, 0.0, 0, True)
        merge = MergeResult(V.copy(), np.zeros(1, dtype=np.int64), 1, np.zeros(len(X), dtype=np.int64), st)
        q_used = 0
        t2 = t3 = time.perf_counter()
    else:
        q_used = min(int(q), m.s_star - 1)
        graph = build_graph(V, q_used, kappa)
        t2 = time.perf_counter()
        merge = convex_merge(V, m.labels, graph, cfg)
        t3 = time.perf_counter()
    timings = {"mps": t1 - t0, "graph": t2 - t1, "cm": t3 - t2, "total": t3 - t0}
    return MckmResult(m, merge, q_used, timings)


def _cc(X, p):
    cfg = CmConfig(gamma=p["gamma"], nu=p["nu"], eta_merge=p["eta"], tol=p["tol"], max_iter=p["max_iter"])
    return convex_cluster(X, int(p["q"]), p["kappa"], cfg)


def run(ds: Dataset, spec: AlgorithmSpec) -> "RunReport":
    """Run one algorithm on ``ds`` and build its report."""
    p = spec.resolved()
    X = ds.points
    extra = {}
    t0 = time.perf_counter()
    if spec.name in ("kmeans", "kmeanspp"):
        init = "random" if spec.name == "kmeans" else "k-means++"
        r = kmeans(X, int(p["k"]), seed=spec.seed, init=init, tol=p["tol"], max_iter=int(p["max_iter"]))
        labels, k_star = r.labels, r.k
        extra["iterations"] = r.iterations
        timings = {}
    elif spec.name == "smkm":
        r = smkm(X, int(p["k"]), seed=spec.seed, max_cycles=int(p["max_cycles"]))
        labels, k_star = r.labels, r.k
        extra["accepted_cycles"] = r.iterations
        timings = {}
    elif spec.name == "cc":
        r = _cc(X, p)
        labels, k_star = r.sample_labels, r.k_star
        extra.update(admm_nodes=len(X), admm_iterations=r.state.iter, admm_converged=r.state.converged)
        timings = {}
    else:
        r = mckm(X, rho=p["rho"], gamma=p["gamma"], q=int(p["q"]), kappa=p["kappa"], nu=p["nu"],
                 eta=p["eta"], tol=p["tol"], max_iter=int(p["max_iter"]), epsilon=p["epsilon"],
                 drop_last=bool(p["drop_last"]), seed=spec.seed)
        labels, k_star = r.labels, r.k_star
        extra.update(s_star=r.s_star, epsilon=r.mps.epsilon, q_used=r.q_used, admm_nodes=r.s_star,
                     admm_iterations=r.merge.state.iter, admm_converged=bool(r.merge.state.converged))
        timings = r.timings
    runtime = time.perf_counter() - t0
    metrics = {"cost": pairwise_cost(X, labels)}
    if ds.labels is not None:
        metrics.update(evaluate(ds.labels, labels))
        metrics["cost_gap"] = cost_gap(X, ds.labels, labels)[2]
    report = {
        "dataset": ds.name,
        "algorithm": spec.name,
        "params": p,
        "seed": spec.seed,
        "k_star": int(k_star),
        "metrics": metrics,
        "runtime_seconds": runtime,
        "timings": timings,
        "assignments_path": None,
        **extra,
    }
    return RunReport(report, np.asarray(labels))


@dataclass
class RunReport:
    report: dict
    labels: np.ndarray

    def stable(self) -> dict:
        """The report without wall-clock fields."""
        return {k: v for k, v in self.report.items() if k not in TIMING_KEYS}


def _run_trial(args):
    ds, spec = args
    return run(ds, spec)


def sweep(ds: Dataset, spec: AlgorithmSpec, trials: int, seed_base: int = 0,
          threads: int = 1) -> List[RunReport]:
    """Repeat ``run`` over seeds ``seed_base .. seed_base + trials - 1``."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    specs = [(ds, AlgorithmSpec(spec.name, dict(spec.params), seed_base + t)) for t in range(trials)]
    if threads <= 1:
        return [_run_trial(a) for a in specs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_trial, specs))


def summarize(reports: List[RunReport]) -> dict:
    """Mean and standard deviation of every numeric metric across trials."""
    keys = sorted({k for r in reports for k in r.report["metrics"]})
    out = {}
    for k in keys:
        vals = np.array([r.report["metrics"][k] for r in reports if k in r.report["metrics"]], dtype=float)
        out[k] = {"mean": float(vals.mean()), "std": float(vals.std())}
    for k in ("k_star", "s_star", "runtime_seconds"):
        vals = [r.report[k] for r in reports if k in r.report]
        if vals:
            out[k] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
    return out
