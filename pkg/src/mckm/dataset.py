"""Data model, normalization, synthetic generators and file I/O."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class DatasetError(ValueError):
    """Invalid dataset contents or a malformed dataset file."""


class GeneratorSpecError(ValueError):
    """Invalid synthetic generator specification."""


def relabel(labels) -> np.ndarray:
    """Map arbitrary cluster ids to 0..k-1 in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.ravel()].astype(np.int64)


@dataclass
class Dataset:
    """n x p sample matrix with optional ground-truth labels.

    Labels are stored 0-based and consecutive; files use 1-based ids.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DatasetError(f"points must be a non-empty n x p matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DatasetError("points contain non-finite coordinates")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (pts.shape[0],):
                raise DatasetError(f"expected {pts.shape[0]} labels, got shape {lab.shape}")
            self.labels = relabel(lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    @property
    def k(self) -> Optional[int]:
        return None if self.labels is None else int(self.labels.max()) + 1


def normalize(ds: Dataset) -> Dataset:
    """Min-max scale every feature column to [0, 1].

    Constant columns are mapped to 0. Applying the map twice gives the
    same result as applying it once.
    """
    X = ds.points
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - lo) / safe, 0.0)
    return Dataset(out, None if ds.labels is None else ds.labels.copy(), ds.name)


# --------------------------------------------------------------------------
# synthetic generators


@dataclass(frozen=True)
class TwoMoons:
    n: int
    noise: float = 0.0
    kind: str = field(default="two-moons", init=False)

    def validate(self):
        if self.n < 2:
            raise GeneratorSpecError("two-moons needs n >= 2")
        if self.noise < 0:
            raise GeneratorSpecError("noise must be >= 0")


@dataclass(frozen=True)
class UnbalancedGaussians:
    sizes: tuple
    means: tuple
    sigmas: tuple
    kind: str = field(default="unbalanced-gaussians", init=False)

    def validate(self):
        if not self.sizes or any(int(s) < 1 for s in self.sizes):
            raise GeneratorSpecError("all cluster sizes must be >= 1")
        if len(self.means) != len(self.sizes) or len(self.sigmas) != len(self.sizes):
            raise GeneratorSpecError("sizes, means and sigmas must have equal length")
        if any(s < 0 for s in self.sigmas):
            raise GeneratorSpecError("sigmas must be >= 0")
        if len({len(m) for m in self.means}) != 1:
            raise GeneratorSpecError("all means must share one dimension")


@dataclass(frozen=True)
class GaussianGrid:
    rows: int
    cols: int
    per_cluster: int
    sigma: float
    kind: str = field(default="gaussian-grid", init=False)

    def validate(self):
        if min(self.rows, self.cols, self.per_cluster) < 1:
            raise GeneratorSpecError("rows, cols and per-cluster counts must be >= 1")
        if self.sigma < 0:
            raise GeneratorSpecError("sigma must be >= 0")

    @property
    def centers(self) -> np.ndarray:
        return np.array([(c, r) for r in range(self.rows) for c in range(self.cols)], dtype=float)


GeneratorSpec = Union[TwoMoons, UnbalancedGaussians, GaussianGrid]

# default stand-in for an unbalanced two-cluster set (D1-like)
_UNBALANCED_DEFAULT_MEANS = ((0.0, 0.0), (2.5, 0.0))
_UNBALANCED_DEFAULT_SIGMAS = (0.6, 0.3)


def parse_spec(text: str) -> GeneratorSpec:
    """Parse a generator spec string.

    Accepted forms::

        gaussian-grid:ROWS,COLS,PER_CLUSTER,SIGMA
        two-moons:N[,NOISE]
        unbalanced-gaussians:SIZE1,SIZE2,...
        {"kind": "unbalanced-gaussians", "sizes": [...], "means": [...], "sigmas": [...]}
    """
    text = text.strip()
    try:
        if text.startswith("{"):
            obj = json.loads(text)
            kind = obj.pop("kind")
            if kind == "gaussian-grid":
                spec = GaussianGrid(int(obj["rows"]), int(obj["cols"]),
                                    int(obj["per_cluster"]), float(obj["sigma"]))
            elif kind == "two-moons":
                spec = TwoMoons(int(obj["n"]), float(obj.get("noise", 0.0)))
            elif kind == "unbalanced-gaussians":
                spec = UnbalancedGaussians(
                    tuple(int(s) for s in obj["sizes"]),
                    tuple(tuple(float(v) for v in m) for m in obj["means"]),
                    tuple(float(s) for s in obj["sigmas"]),
                )
            else:
                raise GeneratorSpecError(f"unknown generator kind {kind!r}")
        else:
            kind, _, args = text.partition(":")
            vals = [a for a in args.split(",") if a.strip()]
            if kind == "gaussian-grid":
                if len(vals) != 4:
                    raise GeneratorSpecError("gaussian-grid takes ROWS,COLS,PER_CLUSTER,SIGMA")
                spec = GaussianGrid(int(vals[0]), int(vals[1]), int(vals[2]), float(vals[3]))
            elif kind == "two-moons":
                if len(vals) not in (1, 2):
                    raise GeneratorSpecError("two-moons takes N[,NOISE]")
                spec = TwoMoons(int(vals[0]), float(vals[1]) if len(vals) == 2 else 0.0)
            elif kind == "unbalanced-gaussians":
                sizes = tuple(int(v) for v in vals)
                if len(sizes) != 2:
                    raise GeneratorSpecError(
                        "shorthand unbalanced-gaussians takes exactly two sizes; use JSON for more")
                spec = UnbalancedGaussians(sizes, _UNBALANCED_DEFAULT_MEANS, _UNBALANCED_DEFAULT_SIGMAS)
            else:
                raise GeneratorSpecError(f"unknown generator kind {kind!r}")
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise GeneratorSpecError(f"malformed generator spec {text!r}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, GeneratorSpecError):
            raise
        raise GeneratorSpecError(f"malformed generator spec {text!r}: {exc}") from exc
    spec.validate()
    return spec


def generate_synthetic(spec: GeneratorSpec, seed=None) -> Dataset:
    """Draw a labeled synthetic dataset; deterministic for a fixed seed."""
    spec.validate()
    rng = np.random.default_rng(seed)
    if isinstance(spec, TwoMoons):
        n_out = spec.n // 2
        n_in = spec.n - n_out
        t_out = np.linspace(0.0, np.pi, n_out)
        t_in = np.linspace(0.0, np.pi, n_in)
        X = np.vstack([
            np.column_stack([np.cos(t_out), np.sin(t_out)]),
            np.column_stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)]),
        ])
        y = np.repeat([0, 1], [n_out, n_in])
        if spec.noise > 0:
            X = X + rng.normal(scale=spec.noise, size=X.shape)
        name = f"two-moons-{spec.n}"
    elif isinstance(spec, GaussianGrid):
        centers = spec.centers
        y = np.repeat(np.arange(len(centers)), spec.per_cluster)
        X = centers[y] + rng.normal(scale=spec.sigma, size=(y.size, 2))
        name = f"gaussian-grid-{spec.rows}x{spec.cols}"
    elif isinstance(spec, UnbalancedGaussians):
        means = np.asarray(spec.means, dtype=float)
        sizes = np.asarray(spec.sizes, dtype=int)
        y = np.repeat(np.arange(len(sizes)), sizes)
        sig = np.asarray(spec.sigmas, dtype=float)[y][:, None]
        X = means[y] + sig * rng.normal(size=(y.size, means.shape[1]))
        name = "unbalanced-" + "-".join(str(s) for s in sizes)
    else:
        raise GeneratorSpecError(f"unsupported generator spec {spec!r}")
    return Dataset(X, y, name)


def load_iris() -> Dataset:
    """The UCI Iris data (150 x 4, three classes), raw feature scale."""
    ref = resources.files("mckm").joinpath("data/iris.csv")
    with resources.as_file(ref) as path:
        ds = load_csv(path)
    ds.name = "iris"
    return ds


# --------------------------------------------------------------------------
# file I/O


def load_csv(path) -> Dataset:
    """Read a dataset from CSV.

    The first row is a header. A final column named ``label`` holds integer
    ground-truth ids, which are remapped to consecutive ids.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if not header or any(_is_number(h) for h in header):
        raise DatasetError(f"{path}: row 1: missing header row")
    has_label = header[-1].lower() == "label"
    width = len(header)
    if has_label and width < 2:
        raise DatasetError(f"{path}: row 1: no feature columns")
    data, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise DatasetError(f"{path}: row {lineno}: expected {width} fields, got {len(row)}")
        try:
            feats = [float(c) for c in (row[:-1] if has_label else row)]
        except ValueError as exc:
            raise DatasetError(f"{path}: row {lineno}: non-numeric cell ({exc})") from None
        if has_label:
            try:
                labels.append(int(row[-1]))
            except ValueError:
                raise DatasetError(f"{path}: row {lineno}: label {row[-1]!r} is not an integer") from None
        data.append(feats)
    if not data:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(np.array(data, dtype=float), np.array(labels) if has_label else None, path.stem)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_csv(path, ds: Dataset, feature_names: Optional[Sequence[str]] = None):
    """Write a dataset as CSV with shortest round-trip float formatting."""
    names = list(feature_names) if feature_names else [f"x{i + 1}" for i in range(ds.p)]
    if len(names) != ds.p:
        raise DatasetError(f"expected {ds.p} feature names, got {len(names)}")
    lines = [",".join(names + (["label"] if ds.labels is not None else []))]
    for j, row in enumerate(ds.points):
        cells = [repr(float(v)) for v in row]
        if ds.labels is not None:
            cells.append(str(int(ds.labels[j]) + 1))
        lines.append(",".join(cells))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def save_results(path, report: dict, assignments=None) -> dict:
    """Write a JSON report and, if given, a per-sample assignment CSV.

    ``path`` is the JSON file; assignments go next to it with suffix
    ``.assignments.csv`` and are written 1-based. Returns the report with
    ``assignments_path`` filled in.
    """
    path = Path(path)
    report = dict(report)
    if assignments is not None:
        apath = path.with_suffix(".assignments.csv")
        lines = ["sample,cluster"] + [f"{j + 1},{int(c) + 1}" for j, c in enumerate(assignments)]
        _atomic_write(apath, "\n".join(lines) + "\n")
        report["assignments_path"] = str(apath)
    else:
        report.setdefault("assignments_path", None)
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
