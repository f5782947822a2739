import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mckm.dataset import (Dataset, DatasetError, GaussianGrid, GeneratorSpecError, TwoMoons,
                          UnbalancedGaussians, generate_synthetic, load_csv, load_iris, normalize,
                          parse_spec, relabel, save_csv, save_results)


def test_relabel_first_appearance():
    assert relabel([7, 7, 3, 9, 3]).tolist() == [0, 0, 1, 2, 1]


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40))
def test_relabel_is_consecutive_and_preserves_partition(ids):
    out = relabel(ids)
    assert set(out.tolist()) == set(range(len(set(ids))))
    for i in range(len(ids)):
        for j in range(len(ids)):
            assert (ids[i] == ids[j]) == (out[i] == out[j])


def test_dataset_rejects_bad_input():
    with pytest.raises(DatasetError):
        Dataset(np.array([[np.nan, 1.0]]))
    with pytest.raises(DatasetError):
        Dataset(np.zeros((3, 2)), labels=[1, 2])
    with pytest.raises(DatasetError):
        Dataset(np.zeros((0, 2)))


def test_normalize_examples():
    ds = normalize(Dataset(np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]])))
    assert ds.points[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert ds.points[:, 1].tolist() == [0.0, 0.0, 0.0]
    ds = normalize(Dataset(np.array([[0.0, 2.0], [4.0, 2.0], [2.0, 2.0]])))
    assert ds.points.tolist() == [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]


def test_normalize_does_not_mutate_source():
    X = np.array([[1.0, 2.0], [3.0, 5.0]])
    ds = Dataset(X.copy())
    normalize(ds)
    assert np.array_equal(ds.points, X)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.integers(1, 4), st.integers(0, 10_000))
def test_normalize_range(n, p, seed):
    X = np.random.default_rng(seed).normal(size=(n, p)) * 100
    Z = normalize(Dataset(X)).points
    assert Z.min() >= 0.0 and Z.max() <= 1.0
    assert np.allclose(Z.min(axis=0), 0.0)


def test_gaussian_grid_layout():
    ds = generate_synthetic(GaussianGrid(1, 2, 50, 0.01), seed=0)
    assert ds.n == 100 and ds.k == 2
    centers = np.array([[0.0, 0.0], [1.0, 0.0]])
    dist = np.linalg.norm(ds.points - centers[ds.labels], axis=1)
    assert dist.max() < 0.1


def test_two_moons_noise_free_on_arcs():
    ds = generate_synthetic(TwoMoons(200, 0.0), seed=1)
    outer = ds.points[ds.labels == 0]
    inner = ds.points[ds.labels == 1]
    assert np.allclose(np.linalg.norm(outer, axis=1), 1.0)
    assert np.allclose(np.linalg.norm(inner - [1.0, 0.5], axis=1), 1.0)


def test_unbalanced_histogram():
    ds = generate_synthetic(parse_spec("unbalanced-gaussians:3300,200"), seed=2)
    assert np.bincount(ds.labels).tolist() == [3300, 200]


def test_generator_deterministic():
    a = generate_synthetic(GaussianGrid(3, 5, 50, 0.01), seed=7)
    b = generate_synthetic(GaussianGrid(3, 5, 50, 0.01), seed=7)
    c = generate_synthetic(GaussianGrid(3, 5, 50, 0.01), seed=8)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_parse_spec_forms():
    assert parse_spec("gaussian-grid:3,5,50,0.01") == GaussianGrid(3, 5, 50, 0.01)
    assert parse_spec("two-moons:100") == TwoMoons(100, 0.0)
    spec = parse_spec(json.dumps({"kind": "unbalanced-gaussians", "sizes": [5, 6],
                                  "means": [[0, 0, 0], [1, 1, 1]], "sigmas": [0.1, 0.2]}))
    assert isinstance(spec, UnbalancedGaussians) and spec.sizes == (5, 6)


@pytest.mark.parametrize("text", ["gaussian-grid:3,5", "two-moons:abc", "spiral:3", "{bad json",
                                  "gaussian-grid:3,5,50,-1", "two-moons:1"])
def test_parse_spec_errors(text):
    with pytest.raises(GeneratorSpecError):
        parse_spec(text)


def test_iris_bundled():
    ds = load_iris()
    assert ds.points.shape == (150, 4)
    assert np.bincount(ds.labels).tolist() == [50, 50, 50]


def test_load_csv_without_labels(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x1,x2\n0,0\n1,1\n")
    ds = load_csv(f)
    assert ds.points.shape == (2, 2) and ds.labels is None


def test_load_csv_labels_kept(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x1,label\n0.5,1\n0.7,2\n0.1,1\n")
    ds = load_csv(f)
    assert ds.labels.tolist() == [0, 1, 0]


@pytest.mark.parametrize("body,row", [("x1,x2\n0,0\n1\n", "row 3"), ("x1,x2\n0,zz\n", "row 2"),
                                      ("1,2\n3,4\n", "row 1"), ("x,label\n1,a\n", "row 2")])
def test_load_csv_errors_name_row(tmp_path, body, row):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(DatasetError, match=row):
        load_csv(f)


def test_csv_round_trip_bit_exact(tmp_path):
    ds = generate_synthetic(TwoMoons(101, 0.07), seed=3)
    save_csv(tmp_path / "m.csv", ds)
    back = load_csv(tmp_path / "m.csv")
    assert np.array_equal(back.points, ds.points)
    assert np.array_equal(back.labels, ds.labels)
    assert (tmp_path / "m.csv").read_text().splitlines()[1].endswith(",1")


def test_save_results_writes_assignments(tmp_path):
    rep = save_results(tmp_path / "r.json", {"k_star": 2}, np.array([0, 1, 1]))
    assert json.loads((tmp_path / "r.json").read_text())["assignments_path"] == rep["assignments_path"]
    lines = (tmp_path / "r.assignments.csv").read_text().splitlines()
    assert lines == ["sample,cluster", "1,1", "2,2", "3,2"]
    assert not list(tmp_path.glob("*.tmp"))
