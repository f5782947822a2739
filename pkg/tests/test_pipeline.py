import json

import numpy as np
import pytest

from mckm.dataset import Dataset, GaussianGrid, generate_synthetic, load_iris, normalize
from mckm.metrics import ari, f_star
from mckm.pipeline import AlgorithmSpec, UsageError, mckm, run, summarize, sweep


def two_clouds(n=40, sigma=0.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, sigma, (n, 2)), rng.normal(0, sigma, (n, 2)) + [3.0, 0.0]]) \
        if sigma else np.repeat([[0.0, 0.0], [3.0, 0.0]], n, axis=0)
    return Dataset(X, np.repeat([0, 1], n), "two-clouds")


def test_mckm_zero_noise_two_clouds():
    ds = two_clouds()
    r = mckm(ds.points, rho=1.0, q=1, gamma=0.1, seed=0)
    assert r.k_star == 2 and ari(ds.labels, r.labels) == 1.0


def test_mckm_single_prototype():
    r = mckm(np.ones((6, 2)), seed=0)
    assert r.s_star == 1 and r.k_star == 1 and r.labels.tolist() == [0] * 6


def test_q_capped_by_prototype_count():
    ds = two_clouds(sigma=0.01)
    r = mckm(ds.points, q=50, gamma=0.1, seed=0)
    assert r.q_used == r.s_star - 1


def test_d5_proxy_majority():
    hits = 0
    for s in range(20):
        ds = generate_synthetic(GaussianGrid(3, 5, 50, 0.01), seed=s)
        hits += mckm(ds.points, rho=1.0, q=1, gamma=0.1, seed=s).k_star == 15
    assert hits > 10


def test_iris_majority_example():
    ds = normalize(load_iris())
    good = 0
    for s in range(20):
        r = mckm(ds.points, rho=0.8, q=2, gamma=0.5, seed=s)
        good += r.k_star == 3 and f_star(ds.labels, r.labels) >= 0.88
    assert good > 10


def test_spec_validation():
    with pytest.raises(UsageError):
        AlgorithmSpec("nope").resolved()
    with pytest.raises(UsageError):
        AlgorithmSpec("kmeans").resolved()
    with pytest.raises(UsageError):
        AlgorithmSpec("kmeans", {"k": 2, "gamma": 1.0}).resolved()
    with pytest.raises(UsageError):
        AlgorithmSpec("mckm", {"gamma": -1.0}).resolved()
    assert AlgorithmSpec("mckm", {"gamma": 0.1}).resolved()["q"] == 2
    assert AlgorithmSpec("cc", {"gamma": 0.1}).resolved()["q"] == 5


@pytest.mark.parametrize("name,params", [("kmeans", {"k": 2}), ("kmeanspp", {"k": 2}), ("smkm", {"k": 2}),
                                         ("cc", {"gamma": 0.2}), ("mckm", {"gamma": 0.1, "q": 1})])
def test_every_algorithm_separable(name, params):
    ds = two_clouds(n=15, sigma=0.01)
    rep = run(ds, AlgorithmSpec(name, params, seed=0))
    m = rep.report["metrics"]
    assert rep.report["k_star"] == 2
    assert m["f_star"] == m["nmi"] == m["ari"] == 1.0
    assert m["cost_gap"] == 0.0
    json.dumps(rep.report)


def test_run_deterministic_modulo_timing():
    ds = generate_synthetic(GaussianGrid(2, 2, 20, 0.05), seed=0)
    spec = AlgorithmSpec("mckm", {"gamma": 0.1}, seed=3)
    a, b = run(ds, spec), run(ds, spec)
    assert json.dumps(a.stable(), sort_keys=True) == json.dumps(b.stable(), sort_keys=True)
    assert "runtime_seconds" not in a.stable()


def test_cc_and_mckm_problem_sizes():
    ds = two_clouds(n=100, sigma=0.02)
    cc = run(ds, AlgorithmSpec("cc", {"gamma": 0.1}, 0)).report
    mc = run(ds, AlgorithmSpec("mckm", {"gamma": 0.1}, 0)).report
    assert cc["k_star"] == mc["k_star"] == 2
    assert cc["admm_nodes"] == 200 and mc["admm_nodes"] <= 20


def test_run_without_labels():
    rep = run(Dataset(np.random.default_rng(0).normal(size=(20, 2))), AlgorithmSpec("kmeans", {"k": 3}))
    assert set(rep.report["metrics"]) == {"cost"}


def test_sweep_seeds_and_threads():
    ds = generate_synthetic(GaussianGrid(2, 2, 15, 0.05), seed=0)
    spec = AlgorithmSpec("kmeanspp", {"k": 4})
    serial = sweep(ds, spec, 4, seed_base=10)
    par = sweep(ds, spec, 4, seed_base=10, threads=2)
    assert [r.report["seed"] for r in serial] == [10, 11, 12, 13]
    assert [r.stable() for r in serial] == [r.stable() for r in par]
    s = summarize(serial)
    assert set(s["ari"]) == {"mean", "std"}
    with pytest.raises(UsageError):
        sweep(ds, spec, 0)


def test_run_does_not_mutate_dataset():
    ds = generate_synthetic(GaussianGrid(2, 2, 15, 0.05), seed=0)
    X, y = ds.points.copy(), ds.labels.copy()
    run(ds, AlgorithmSpec("mckm", {"gamma": 0.1}))
    assert np.array_equal(ds.points, X) and np.array_equal(ds.labels, y)
