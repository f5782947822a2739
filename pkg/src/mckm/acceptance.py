"""Desk-scale acceptance suite.

Each check returns a :class:`CriterionResult`. Thresholds are fixed here and
shared by ``mckm reproduce`` and the test suite. Wall-clock budgets are
reported next to the measured time but do not decide pass/fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .cm import CmConfig, admm_solve, convex_cluster, objective
from .dataset import GaussianGrid, generate_synthetic, load_iris, normalize
from .graph import build_graph
from .kmeans import d2_sample, kmeans, kmeans_cost, lloyd, pairwise_cost, sq_dists, update_centroids
from .metrics import ari, cost_gap, f_star, nmi
from .mps import check_expected_cost_bound, epsilon_from_rho, mps
from .pipeline import mckm
from .smkm import smkm

D5_PROXY = GaussianGrid(3, 5, 50, 0.01)
D5_GAMMAS = (0.02, 0.05, 0.1, 0.2, 0.5)
D5_GAMMA = 0.1
TRIALS = 20


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:>2}. {self.name}: {self.detail} "
                f"({self.seconds:.2f}s, budget {self.budget:g}s)")


def _d5(seed):
    return generate_synthetic(D5_PROXY, seed=seed)


def check_cost_identity(instances: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(5, 101))
        p = int(rng.integers(1, 6))
        k = int(rng.integers(1, 6))
        X = rng.normal(size=(n, p)) * rng.uniform(0.1, 10.0)
        labels = np.concatenate([np.arange(k), rng.integers(k, size=n - k)])
        rng.shuffle(labels)
        C = update_centroids(X, labels, k).centers
        a, b = kmeans_cost(X, C, labels), pairwise_cost(X, labels)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return worst <= 1e-9, f"max relative difference {worst:.2e} over {instances} instances (tol 1e-9)"


def check_lloyd(runs: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_rise = 0.0
    fixed_ok = 0
    for r in range(runs):
        n = int(rng.integers(20, 120))
        p = int(rng.integers(1, 5))
        k = int(rng.integers(2, 7))
        X = rng.normal(size=(n, p))
        # a positive tol this small only stops on unchanged assignments
        res = kmeans(X, k, seed=r, tol=1e-300, max_iter=1000)
        h = np.asarray(res.cost_history)
        if len(h) > 1:
            worst_rise = max(worst_rise, float(np.max(h[1:] - h[:-1])))
        again = lloyd(X, res.prototypes.centers, tol=1e-300, max_iter=1000)
        if (again.iterations == 1 and np.array_equal(again.labels, res.labels)
                and np.array_equal(again.prototypes.centers, res.prototypes.centers)):
            fixed_ok += 1
    ok = worst_rise <= 1e-12 and fixed_ok == runs
    return ok, f"largest cost increase {max(worst_rise, 0.0):.2e} (tol 1e-12); fixed point kept in {fixed_ok}/{runs}"


def check_kmeanspp_law(draws: int = 100_000, seed: int = 0):
    X = np.array([[0.0], [1.0], [3.0]])
    d2 = sq_dists(X, X[[0]])[:, 0]
    rng = np.random.default_rng(seed)
    counts = np.bincount([d2_sample(d2, rng) for _ in range(draws)], minlength=3)
    freq = counts / draws
    err = float(np.max(np.abs(freq - np.array([0.0, 0.1, 0.9]))))
    return err <= 0.01, f"frequencies {np.round(freq, 4).tolist()} vs [0, 0.1, 0.9], max error {err:.4f} (tol 0.01)"


def check_admm(instances: int = 10, seed: int = 0, oracle_iters: int = 10**6):
    from .oracles import subgradient_objective

    rng = np.random.default_rng(seed)
    notes = []
    ok = True
    # (a) no penalty
    V = rng.normal(size=(6, 3))
    st = admm_solve(V, build_graph(V, 2), CmConfig(gamma=0.0))
    err_a = float(np.max(np.abs(st.mu - V)))
    ok &= err_a <= 1e-8
    notes.append(f"(a) |mu-V| {err_a:.1e}")
    # (b) penalty large enough to fuse everything
    V = rng.normal(size=(5, 2))
    st = admm_solve(V, build_graph(V, 4), CmConfig(gamma=50.0, max_iter=100000))
    err_b = float(np.max(np.abs(st.mu - V.mean(axis=0))))
    ok &= err_b <= 1e-6
    notes.append(f"(b) |mu-mean| {err_b:.1e}")
    # (c) objective against subgradient descent, (d) residuals
    worst_c, worst_d, converged = 0.0, 0.0, 0
    for _ in range(instances):
        V = rng.random((5, 2))
        g = build_graph(V, 2)
        gamma = float(rng.uniform(0.05, 0.5))
        st = admm_solve(V, g, CmConfig(gamma=gamma))
        fa = objective(st.mu, V, g, gamma)
        fb = subgradient_objective(V, g, gamma, oracle_iters)
        worst_c = max(worst_c, abs(fa - fb))
        if st.converged:
            converged += 1
            worst_d = max(worst_d, st.primal_residual, st.dual_residual)
    ok &= worst_c <= 1e-5 and converged == instances and worst_d <= 1e-6
    notes.append(f"(c) objective gap {worst_c:.1e}")
    notes.append(f"(d) residuals {worst_d:.1e} ({converged}/{instances} converged)")
    return bool(ok), "; ".join(notes)


def _mps_runs():
    iris = normalize(load_iris())
    for s in range(TRIALS):
        yield iris.points, 0.8, s
    for s in range(10):
        yield generate_synthetic(GaussianGrid(2, 3, 40, 0.05), seed=s).points, 1.0, s
    yield np.repeat([[0.0], [1.0]], 50, axis=0), 1.0, 0


def check_mps():
    eps = epsilon_from_rho(150, 4, 0.8)
    ok = abs(eps - 0.051031) <= 1e-6
    runs = monotone = boundary = 0
    for X, rho, s in _mps_runs():
        r = mps(X, rho=rho, seed=s)
        R = np.array([v for _, v in r.trace])
        runs += 1
        monotone += bool(np.all(np.diff(R) <= 0))
        rates = np.asarray(r.rates)
        if R[-1] == 0 or len(r.sampled) == len(X):
            good = bool(np.all(rates[:-1] > r.epsilon))
        else:
            good = bool(np.all(rates[:-1] > r.epsilon) and rates[-1] <= r.epsilon)
        boundary += good
    coincident = mps(np.repeat([[0.0], [1.0]], 50, axis=0), seed=3).s_star
    ok &= monotone == runs and boundary == runs and coincident == 2
    return bool(ok), (f"eps(150,4,0.8)={eps:.6f}; R non-increasing {monotone}/{runs}; "
                      f"stopping boundary {boundary}/{runs}; coincident groups s*={coincident}")


def check_cost_bound():
    ds = generate_synthetic(GaussianGrid(2, 2, 50, 0.02), seed=0)
    results = [mps(ds.points, seed=s) for s in range(TRIALS)]
    rep = check_expected_cost_bound(ds.points, results, labels=ds.labels, reference="labels")
    return bool(rep.holds), (f"mean J {rep.mean_j_x:.4g} <= bound {rep.mean_rhs:.4g}"
                             if rep.holds else f"mean J {rep.mean_j_x:.4g} > bound {rep.mean_rhs:.4g}")


def check_d5_proxy(gammas: Sequence[float] = D5_GAMMAS):
    hits = {}
    for g in gammas:
        c = 0
        for s in range(TRIALS):
            ds = _d5(s)
            r = mckm(ds.points, rho=1.0, q=1, gamma=g, seed=s)
            c += r.k_star == 15 and ari(ds.labels, r.labels) >= 0.90
        hits[g] = c
    best = max(hits, key=lambda g: hits[g])
    table = ", ".join(f"gamma={g:g}: {c}/{TRIALS}" for g, c in hits.items())
    return hits[best] >= 15, f"k*=15 and ARI>=0.90 ({table}); best gamma {best:g} (need >=15)"


def check_iris(gamma: float = 0.5):
    ds = normalize(load_iris())
    ks, fs, aris, nmis = [], [], [], []
    for s in range(TRIALS):
        r = mckm(ds.points, rho=0.8, q=2, gamma=gamma, seed=s)
        ks.append(r.k_star)
        fs.append(f_star(ds.labels, r.labels))
        aris.append(ari(ds.labels, r.labels))
        nmis.append(nmi(ds.labels, r.labels))
    k, F, A, N = (float(np.median(v)) for v in (ks, fs, aris, nmis))
    ok = k == 3 and F >= 0.85 and A >= 0.65
    return ok, (f"median k*={k:g} (need 3), F*={F:.4f} (need >=0.85), "
                f"ARI={A:.4f} (need >=0.65), NMI={N:.4f}")


def check_cost_gap():
    mc_le_sm = both_beat = 0
    gaps = []
    for s in range(TRIALS):
        ds = _d5(s)
        X, y = ds.points, ds.labels
        g_mc = cost_gap(X, y, mckm(X, rho=1.0, q=1, gamma=D5_GAMMA, seed=s).labels)[2]
        g_sm = cost_gap(X, y, smkm(X, 15, seed=s).labels)[2]
        g_km = cost_gap(X, y, kmeans(X, 15, seed=s, init="random").labels)[2]
        gaps.append((g_mc, g_sm, g_km))
        mc_le_sm += g_mc <= g_sm
        both_beat += g_mc < g_km and g_sm < g_km
    med = np.median(np.array(gaps), axis=0)
    ok = mc_le_sm >= 0.7 * TRIALS and both_beat >= 0.9 * TRIALS
    return ok, (f"MCKM<=SMKM in {mc_le_sm}/{TRIALS} (need >=14); both beat K-Means in "
                f"{both_beat}/{TRIALS} (need >=18); median gaps MCKM {med[0]:.3g}, "
                f"SMKM {med[1]:.3g}, K-Means {med[2]:.3g}")


def check_metric_oracles(pairs: int = 100, n: int = 12, seed: int = 0):
    from .oracles import ari_pairs, f_star_sets, nmi_entropy

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        a = rng.integers(int(rng.integers(1, 6)), size=n)
        b = rng.integers(int(rng.integers(1, 6)), size=n)
        worst = max(worst, abs(ari(a, b) - ari_pairs(a, b)), abs(nmi(a, b) - nmi_entropy(a, b)),
                    abs(f_star(a, b) - f_star_sets(a, b)))
    ident = True
    for _ in range(20):
        a = rng.integers(int(rng.integers(1, 6)), size=n)
        perm = rng.permutation(10)
        ident &= ari(a, perm[a]) == 1.0 and nmi(a, perm[a]) == 1.0 and abs(f_star(a, perm[a]) - 1.0) <= 1e-12
    ok = worst <= 1e-12 and ident
    return bool(ok), f"max deviation from oracles {worst:.1e} (tol 1e-12); identical partitions score 1: {bool(ident)}"


def check_scale(n: int = 5000, cc_max_iter: int = 2000):
    ds = generate_synthetic(GaussianGrid(1, 2, n // 2, 0.1), seed=0)
    t0 = time.perf_counter()
    r = mckm(ds.points, rho=1.0, q=2, gamma=0.1, seed=0)
    t_mc = time.perf_counter() - t0
    t0 = time.perf_counter()
    cc = convex_cluster(ds.points, 5, 0.9, CmConfig(gamma=0.1, max_iter=cc_max_iter))
    t_cc = time.perf_counter() - t0
    ok = r.s_star <= n / 20
    return ok, (f"s*={r.s_star} (need <={n // 20}); MCKM {t_mc:.2f}s vs CC {t_cc:.2f}s "
                f"(CC {cc.state.iter} iterations, converged={cc.state.converged}; timing informational)")


CRITERIA: List[tuple] = [
    (1, "cost identity", 1, check_cost_identity),
    (2, "Lloyd monotonicity and fixed point", 5, check_lloyd),
    (3, "K-Means++ sampling law", 5, check_kmeanspp_law),
    (4, "ADMM correctness", 30, check_admm),
    (5, "MPS properties", 5, check_mps),
    (6, "MPS expectation bound", 30, check_cost_bound),
    (7, "D5 proxy recovery", 120, check_d5_proxy),
    (8, "Iris reproduction", 60, check_iris),
    (9, "cost-gap dominance", 180, check_cost_gap),
    (10, "metric oracles", 5, check_metric_oracles),
    (11, "scale (s* << n)", 300, check_scale),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            passed, detail = fn()
            return CriterionResult(num, name, bool(passed), detail, time.perf_counter() - t0, budget)
    raise KeyError(f"no criterion {number}")


def run_all(only: Optional[Sequence[int]] = None,
            echo: Optional[Callable[[str], None]] = None) -> List[CriterionResult]:
    out = []
    for num, *_ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num)
        if echo:
            echo(res.line())
        out.append(res)
    return out
