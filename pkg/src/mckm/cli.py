"""Command-line harness.

Exit codes: 0 success, 1 acceptance failure, 2 usage error, 3 I/O error.
Relative output paths are resolved against ``$MCKM_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .cm import CmConfig, gamma_path
from .dataset import (DatasetError, GeneratorSpecError, _atomic_write, generate_synthetic,
                      load_csv, load_iris, normalize, parse_spec, save_csv, save_results)
from .graph import build_graph
from .mps import MpsConfig, mps
from .pipeline import ALGORITHMS, DEFAULTS, AlgorithmSpec, UsageError, run, summarize, sweep

OUTPUT_ENV = "MCKM_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

# CLI flag -> algorithm parameter
_PARAM_FLAGS = {
    "k": "k", "rho": "rho", "epsilon": "epsilon", "drop_last": "drop_last", "gamma": "gamma",
    "q": "q", "kappa": "kappa", "nu": "nu", "eta": "eta", "tol": "tol", "max_iter": "max_iter",
    "max_cycles": "max_cycles",
}


def _out_path(p) -> Path:
    p = Path(p)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) / p if base and not p.is_absolute() else p


def _add_data_args(sp):
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--data", help="CSV file, or 'iris' for the bundled copy")
    g.add_argument("--spec", help="generator spec, e.g. gaussian-grid:3,5,50,0.01")
    sp.add_argument("--data-seed", type=int, default=0, help="seed for --spec (default 0)")
    sp.add_argument("--normalize", action="store_true", help="min-max scale every feature")


def _add_algo_args(sp):
    sp.add_argument("--algo", "--algorithm", dest="algo", required=True, choices=ALGORITHMS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--k", type=int)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--drop-last", action="store_true", default=None)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--q", type=int)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--max-cycles", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mckm", description="MCKM clustering toolkit and experiment harness")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a synthetic labeled dataset as CSV")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", required=True)

    sp = sub.add_parser("run", help="run one algorithm and print a JSON report")
    _add_data_args(sp)
    _add_algo_args(sp)
    sp.add_argument("-o", "--output", help="write the report (and assignments) here")

    sp = sub.add_parser("sweep", help="repeat a run over seeds and summarize")
    _add_data_args(sp)
    _add_algo_args(sp)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("gamma-path", help="emit the (gamma, k*) fusion trace as CSV")
    _add_data_args(sp)
    sp.add_argument("--algo", "--algorithm", dest="algo", choices=("mckm", "cc"), default="mckm")
    sp.add_argument("--gamma-path", required=True, help="a:b:steps, evenly spaced and ascending")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rho", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--q", type=int)
    sp.add_argument("--kappa", type=float, default=0.9)
    sp.add_argument("--nu", type=float, default=1.0)
    sp.add_argument("--eta", type=float, default=1e-6)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=int, default=10000)
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("reproduce", help="run the desk-scale acceptance suite")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("-o", "--output", help="also write the table as JSON")
    return ap


def _load(args):
    if args.spec is not None:
        ds = generate_synthetic(parse_spec(args.spec), seed=args.data_seed)
    elif args.data == "iris":
        ds = load_iris()
    else:
        ds = load_csv(args.data)
    return normalize(ds) if args.normalize else ds


def _algo_spec(args) -> AlgorithmSpec:
    known = DEFAULTS[args.algo]
    params = {}
    for flag, key in _PARAM_FLAGS.items():
        val = getattr(args, flag, None)
        if val is None:
            continue
        if key not in known:
            raise UsageError(f"--{flag.replace('_', '-')} does not apply to {args.algo}")
        params[key] = val
    spec = AlgorithmSpec(args.algo, params, args.seed)
    spec.resolved()
    return spec


def _parse_path(text: str) -> np.ndarray:
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError:
        raise UsageError(f"--gamma-path expects a:b:steps, got {text!r}") from None
    if steps < 1 or a < 0 or b < a:
        raise UsageError("--gamma-path needs 0 <= a <= b and steps >= 1")
    return np.linspace(a, b, steps)


def _emit(text: str, output):
    if output:
        _atomic_write(_out_path(output), text)
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    ds = generate_synthetic(parse_spec(args.spec), seed=args.seed)
    path = _out_path(args.output)
    save_csv(path, ds)
    print(f"wrote {ds.n} rows to {path}")
    return EXIT_OK


def cmd_run(args):
    ds = _load(args)
    rep = run(ds, _algo_spec(args))
    report = rep.report
    if args.output:
        report = save_results(_out_path(args.output), report, rep.labels)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args):
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    ds = _load(args)
    spec = _algo_spec(args)
    reports = sweep(ds, spec, args.trials, seed_base=args.seed, threads=args.threads)
    summary = {"dataset": ds.name, "algorithm": spec.name, "params": spec.resolved(),
               "trials": args.trials, "seed_base": args.seed, "summary": summarize(reports)}
    lines = [f"{spec.name} on {ds.name}, {args.trials} trials"]
    for key, s in summary["summary"].items():
        lines.append(f"  {key:16s} {s['mean']:.4f} ± {s['std']:.4f}")
    print("\n".join(lines))
    if args.output:
        _atomic_write(_out_path(args.output), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_gamma_path(args):
    ds = _load(args)
    gammas = _parse_path(args.gamma_path)
    cfg = CmConfig(nu=args.nu, eta_merge=args.eta, tol=args.tol, max_iter=args.max_iter)
    if args.algo == "mckm":
        V = mps(ds.points, MpsConfig(rho=args.rho, epsilon=args.epsilon, seed=args.seed)).prototypes.centers
        q = 2 if args.q is None else args.q
    else:
        V = ds.points
        q = 5 if args.q is None else args.q
    if len(V) < 2:
        rows = [(g, 1) for g in gammas]
    else:
        graph = build_graph(V, min(q, len(V) - 1), args.kappa)
        rows = [(g, k) for g, k, _ in gamma_path(V, graph, cfg, gammas)]
    text = "gamma,k_star\n" + "".join(f"{g!r},{k}\n" for g, k in rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_reproduce(args):
    from .acceptance import run_all

    only = None
    if args.only:
        try:
            only = [int(x) for x in args.only.split(",")]
        except ValueError:
            raise UsageError(f"--only expects comma-separated integers, got {args.only!r}") from None
    results = run_all(only, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    if args.output:
        rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
                 "seconds": r.seconds, "budget_seconds": r.budget} for r in results]
        _atomic_write(_out_path(args.output), json.dumps(rows, indent=2) + "\n")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep,
            "gamma-path": cmd_gamma_path, "reproduce": cmd_reproduce}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GeneratorSpecError) as exc:
        print(f"mckm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, OSError) as exc:
        print(f"mckm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mckm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
