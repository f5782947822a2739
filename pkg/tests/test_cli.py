import json

import pytest

from mckm.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, cli
from mckm.dataset import load_csv


def test_generate(tmp_path):
    out = tmp_path / "d5.csv"
    assert cli(["generate", "--spec", "gaussian-grid:3,5,50,0.01", "--seed", "7", "-o", str(out)]) == EXIT_OK
    ds = load_csv(out)
    assert ds.n == 750 and ds.k == 15


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MCKM_OUTPUT_DIR", str(tmp_path / "outs"))
    assert cli(["generate", "--spec", "two-moons:20", "-o", "m.csv"]) == EXIT_OK
    assert (tmp_path / "outs" / "m.csv").exists()


def test_run_iris_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = cli(["run", "--algo", "mckm", "--rho", "1", "--q", "2", "--gamma", "0.5", "--data", "iris",
                "--normalize", "--seed", "1", "-o", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert {"k_star", "metrics", "s_star", "runtime_seconds"} <= set(rep)
    assert {"f_star", "nmi", "ari", "cost", "cost_gap"} <= set(rep["metrics"])
    assert len((tmp_path / "r.assignments.csv").read_text().splitlines()) == 151
    assert json.loads(capsys.readouterr().out)["k_star"] == rep["k_star"]


def test_run_from_csv_leaves_input_untouched(tmp_path):
    data = tmp_path / "d.csv"
    cli(["generate", "--spec", "gaussian-grid:1,2,20,0.01", "-o", str(data)])
    before = data.read_bytes()
    assert cli(["run", "--algo", "smkm", "--k", "2", "--data", str(data)]) == EXIT_OK
    assert data.read_bytes() == before


def test_sweep_prints_mean_std(tmp_path, capsys):
    out = tmp_path / "s.json"
    code = cli(["sweep", "--algo", "mckm", "--spec", "gaussian-grid:2,2,20,0.02", "--gamma", "0.1",
                "--trials", "3", "-o", str(out)])
    assert code == EXIT_OK
    assert "±" in capsys.readouterr().out
    assert json.loads(out.read_text())["summary"]["k_star"]["mean"] == 4.0


def test_gamma_path_csv(tmp_path):
    out = tmp_path / "path.csv"
    code = cli(["gamma-path", "--spec", "gaussian-grid:1,2,20,0.01", "--gamma-path", "0:2:5", "-o", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "gamma,k_star" and len(lines) == 6
    assert int(lines[-1].split(",")[1]) == 1


@pytest.mark.parametrize("argv", [
    ["run", "--algo", "bogus", "--data", "iris"],
    ["run", "--algo", "kmeans", "--data", "iris"],
    ["run", "--algo", "kmeans", "--k", "3", "--gamma", "1", "--data", "iris"],
    ["generate", "--spec", "spiral:3", "-o", "x.csv"],
    ["gamma-path", "--data", "iris", "--gamma-path", "1:0:3"],
    ["reproduce", "--only", "x"],
    [],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli(argv) == EXIT_USAGE


def test_io_errors(tmp_path):
    assert cli(["run", "--algo", "kmeans", "--k", "2", "--data", str(tmp_path / "missing.csv")]) == EXIT_IO
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n1,2\n3\n")
    assert cli(["run", "--algo", "kmeans", "--k", "2", "--data", str(bad)]) == EXIT_IO


def test_reproduce_subset(capsys, tmp_path):
    out = tmp_path / "table.json"
    assert cli(["reproduce", "--only", "1,10", "-o", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[PASS]  1." in text and "[PASS] 10." in text
    assert [row["criterion"] for row in json.loads(out.read_text())] == [1, 10]


def test_reproduce_failure_exit_code(monkeypatch):
    import mckm.acceptance as acc
    monkeypatch.setattr(acc, "CRITERIA", [(99, "always fails", 1, lambda: (False, "forced"))])
    assert cli(["reproduce"]) == EXIT_FAIL
