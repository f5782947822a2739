import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mckm.dataset import GaussianGrid, generate_synthetic, load_iris, normalize
from mckm.kmeans import PrototypeSet, sq_dists
from mckm.mps import (MpsConfig, MpsResult, check_expected_cost_bound, epsilon_from_rho, mps, reconstruction,
                      sample_prototypes)


def test_reconstruction_examples():
    X = np.array([[0.0], [1.0], [3.0]])
    assert reconstruction(X, [[0.0]]) == 10.0
    assert reconstruction(X, X) == 0.0
    assert reconstruction(X, [[0.0], [3.0]]) == 1.0


def test_reconstruction_is_sum_of_min_sq_dists():
    rng = np.random.default_rng(0)
    X, V = rng.normal(size=(40, 3)), rng.normal(size=(5, 3))
    assert reconstruction(X, V) == pytest.approx(sq_dists(X, V).min(axis=1).sum(), rel=1e-14)


def test_epsilon_examples():
    assert epsilon_from_rho(150, 4, 0.8) == pytest.approx(0.051031, abs=1e-6)
    assert epsilon_from_rho(1, 1, 1.0) == 1.0
    assert epsilon_from_rho(10000, 1, 1.0) == pytest.approx(0.01)


def test_config_validation():
    with pytest.raises(ValueError):
        MpsConfig(rho=0)
    with pytest.raises(ValueError):
        MpsConfig(epsilon=1.0)
    with pytest.raises(TypeError):
        mps(np.zeros((3, 1)), MpsConfig(), rho=2.0)
    with pytest.raises(ValueError):
        mps(np.zeros((1, 1)))


def test_coincident_groups_stop_at_two():
    X = np.repeat([[0.0], [1.0]], 50, axis=0)
    for s in range(10):
        r = mps(X, seed=s)
        assert r.s_star == 2
        assert r.trace[-1][1] == 0.0


def test_all_identical_stops_at_one():
    r = mps(np.ones((10, 2)), seed=0)
    assert r.s_star == 1 and r.trace == [(1, 0.0)]


def _check_run(r: MpsResult, n):
    R = np.array([v for _, v in r.trace])
    assert np.all(np.diff(R) <= 0)
    assert [s for s, _ in r.trace] == list(range(1, len(r.trace) + 1))
    rates = np.asarray(r.rates)
    assert np.all(rates[:-1] > r.epsilon)
    if R[-1] > 0 and len(r.sampled) < n:
        assert rates[-1] <= r.epsilon
    # no duplicate picks while D^2 mass remains
    assert len(set(r.sampled.tolist())) == len(r.sampled)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 3.0))
def test_mps_invariants(seed, rho):
    X = np.random.default_rng(seed).normal(size=(80, 2))
    _check_run(mps(X, rho=rho, seed=seed), 80)


def test_iris_s_star_range():
    X = normalize(load_iris()).points
    for s in range(20):
        r = mps(X, rho=0.8, seed=s)
        assert 1 <= r.s_star < 150
        _check_run(r, 150)


def test_stopping_prototype_retained_or_dropped():
    X = generate_synthetic(GaussianGrid(2, 2, 30, 0.05), seed=1).points
    kept = sample_prototypes(X, 0.05, seed=3)[0]
    dropped = sample_prototypes(X, 0.05, seed=3, drop_last=True)[0]
    assert np.array_equal(kept[:-1], dropped)
    assert mps(X, epsilon=0.05, seed=3, drop_last=True).s_star == len(kept) - 1


def test_explicit_epsilon_overrides_rho():
    X = np.random.default_rng(2).normal(size=(50, 2))
    assert mps(X, epsilon=0.2, rho=5.0, seed=0).epsilon == 0.2


def test_mps_deterministic():
    X = np.random.default_rng(3).normal(size=(70, 3))
    a, b = mps(X, seed=11), mps(X, seed=11)
    assert np.array_equal(a.sampled, b.sampled)
    assert np.array_equal(a.prototypes.centers, b.prototypes.centers)


def test_grid_s_star_in_low_tens():
    X = generate_synthetic(GaussianGrid(2, 3, 40, 0.05), seed=0).points
    s = [mps(X, seed=t).s_star for t in range(10)]
    assert all(6 <= v <= 60 for v in s)


def test_bound_with_optimal_prototypes():
    ds = generate_synthetic(GaussianGrid(2, 2, 25, 0.02), seed=0)
    C = np.array([ds.points[ds.labels == c].mean(axis=0) for c in range(4)])
    r = MpsResult(PrototypeSet(C), ds.labels.copy(), 4, 0.1, [], np.arange(4), 0.0)
    rep = check_expected_cost_bound(ds.points, r, labels=ds.labels)
    assert rep.j_x[0] == pytest.approx(rep.j_opt)
    # v = v*, so only samples sitting exactly on their center would count
    assert rep.n_a[0] == 0
    assert rep.holds


def test_bound_over_seeds():
    ds = generate_synthetic(GaussianGrid(2, 2, 50, 0.02), seed=0)
    runs = [mps(ds.points, seed=s) for s in range(20)]
    rep = check_expected_cost_bound(ds.points, runs, labels=ds.labels)
    assert rep.reference == "labels" and rep.holds and not rep.vacuous
    rep2 = check_expected_cost_bound(ds.points, runs[:3], reference="restarts", restarts=5)
    assert rep2.reference == "restarts" and rep2.j_opt > 0


def test_bound_flags_vacuous_epsilon():
    ds = generate_synthetic(GaussianGrid(1, 2, 10, 0.02), seed=0)
    r = mps(ds.points, seed=0)
    rep = check_expected_cost_bound(ds.points, r, epsilon=1.0, labels=ds.labels)
    assert rep.vacuous
    assert rep.mean_rhs == 0.0
