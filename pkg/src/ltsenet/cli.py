"""Command-line interface: fit, fit-path, bounds, simulate, verify-tails.

Exit codes: 0 ok, 1 verification failure, 2 data error, 3 solver
failure, 64 usage, 65 undefined bound.  All runs are deterministic given
their flags and seed; output files are written atomically.  The
environment variable ROBUST_TRIM_THREADS caps trial parallelism for the
simulate command (default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bounds import BoundInputs, compute_bound_report
from .core import Dataset, TrimPenaltyConfig
from .exceptions import (
    SolverError,
    SubsetTooLargeError,
    UndefinedBoundError,
)
from .simulate import (
    SimConfig,
    SolverSettings,
    chi_square_tail_check,
    run_contamination_comparison,
    run_coverage_experiment,
    subgaussian_max_check,
)
from .solver import default_h, fit_cstep, fit_exact, fit_path

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_DATA = 2
EXIT_SOLVER = 3
EXIT_USAGE = 64
EXIT_UNDEFINED_BOUND = 65

SCHEMA_VERSION = 1


class DataError(Exception):
    """Malformed input data (CSV/JSON)."""


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with the usage code on bad flags."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        _atomic_write_text(output, text)


def _read_csv(path: str, response: str | None, add_intercept: bool):
    """Load a numeric CSV with a header row; returns (Dataset, feature names)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError("CSV needs a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in CSV header")
    body = rows[1:]
    width = len(header)
    data = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataError(f"row {i + 2} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataError(f"missing value at row {i + 2}, column {header[j]!r}")
            try:
                data[i, j] = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"non-numeric value {cell!r} at row {i + 2}, column {header[j]!r}"
                ) from exc
    if not np.all(np.isfinite(data)):
        raise DataError("CSV contains non-finite values")
    resp = header[-1] if response is None else response
    if resp not in header:
        raise DataError(f"response column {resp!r} not found; columns: {header}")
    ridx = header.index(resp)
    y = data[:, ridx]
    feats = np.delete(data, ridx, axis=1)
    names = [h for h in header if h != resp]
    try:
        if add_intercept:
            ds = Dataset.from_features(feats, y)
        else:
            ds = Dataset(feats, y)  # first column must already be the intercept
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return ds, names


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _n_jobs_from_env() -> int:
    raw = os.environ.get("ROBUST_TRIM_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        return 1
    return max(1, val)


def _load_warm_start(path: str, p: int) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read warm start {path}: {exc}") from exc
    beta = doc.get("beta")
    if beta is None or len(beta) != p:
        raise DataError(f"warm start must carry a 'beta' list of length {p}")
    return np.asarray(beta, dtype=float)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    try:
        data, names = _read_csv(args.input, args.response, args.add_intercept)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    h = default_h(data.n) if args.h is None else args.h
    try:
        cfg = TrimPenaltyConfig(
            h=h,
            lambda1=args.lambda1,
            lambda2=args.lambda2,
            tol=args.tol,
            max_iter=args.max_iter,
            penalize_intercept=args.penalize_intercept,
        )
        warm = None
        if args.warm_start is not None:
            warm = _load_warm_start(args.warm_start, data.p)
        if args.exact:
            result = fit_exact(data, cfg, cap=args.cap)
        else:
            result = fit_cstep(data, cfg, n_starts=args.n_starts, seed=args.seed, warm_start=warm)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, SubsetTooLargeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "timestamp": _timestamp(),
        "input": args.input,
        "response": args.response,
        "feature_names": names,
        "beta": [float(v) for v in result.beta],
        "intercept": float(result.beta[0]),
        "coefficients": {name: float(v) for name, v in zip(names, result.beta[1:])},
        "trim_indices": [int(i) + 1 for i in result.trim.indices],
        "objective": result.objective_value,
        "method": result.method,
        "diagnostics": {
            "starts_used": result.starts_used,
            "cstep_iterations": result.cstep_iterations,
            "unique_flag": result.unique_flag,
            "kkt_residual": result.kkt_residual,
            "used_min_norm": result.used_min_norm,
        },
        "resolved_config": {
            "h": cfg.h,
            "lambda1": cfg.lambda1,
            "lambda2": cfg.lambda2,
            "gamma": cfg.gamma,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "penalize_intercept": cfg.penalize_intercept,
            "add_intercept": args.add_intercept,
            "exact": args.exact,
            "cap": args.cap,
            "n_starts": args.n_starts,
            "seed": args.seed,
            "warm_start": args.warm_start,
        },
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_fit_path(args) -> int:
    try:
        data, names = _read_csv(args.input, args.response, args.add_intercept)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    h = default_h(data.n) if args.h is None else args.h
    try:
        cfg = TrimPenaltyConfig(
            h=h,
            lambda1=1.0,  # replaced per grid point
            tol=args.tol,
            max_iter=args.max_iter,
            penalize_intercept=args.penalize_intercept,
        )
        if args.lambda1_grid is not None:
            grid = [float(v) for v in args.lambda1_grid.split(",") if v.strip()]
        else:
            from .solver import lambda_max

            top = lambda_max(data, h) * 1.1
            if top <= 0:
                raise ValueError("cannot derive a lambda grid from an all-zero response")
            grid = list(np.geomspace(top, top * args.lambda1_min_ratio, args.grid_size))
        path = fit_path(
            data,
            cfg,
            grid,
            lambda2_ratio=args.lambda2_ratio,
            n_starts=args.n_starts,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit-path",
        "input": args.input,
        "feature_names": names,
        "lambda2_ratio": args.lambda2_ratio,
        "entries": [
            {
                "lambda1": lam,
                "lambda2": args.lambda2_ratio * lam,
                "beta": [float(v) for v in fr.beta],
                "objective": fr.objective_value,
                "n_nonzero": int(np.sum(fr.beta != 0.0)),
                "trim_indices": [int(i) + 1 for i in fr.trim.indices],
            }
            for lam, fr in path
        ],
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        if args.beta0_file is not None:
            try:
                with open(args.beta0_file) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise DataError(f"cannot read beta0 file: {exc}") from exc
            beta0 = np.asarray(doc["beta"] if isinstance(doc, dict) else doc, dtype=float)
        elif args.norm_beta0 is not None:
            if args.norm_beta0 < 0:
                raise ValueError("--norm-beta0 must be nonnegative")
            # only the l1 norm enters the formulas; stand in a one-hot vector
            beta0 = np.zeros(args.p)
            beta0[0] = args.norm_beta0
        else:
            raise ValueError("provide either --beta0-file or --norm-beta0")
        inputs = BoundInputs.create(
            n=args.n, p=args.p, h=args.h, sigma=args.sigma, delta=args.delta, beta0=beta0
        )
        k = args.k
        if k is None and args.s0 is not None:
            from .bounds import min_incoherence_k

            k = min_incoherence_k(args.p, args.s0)
        report = compute_bound_report(
            inputs,
            lambda2=args.lambda2,
            sigma_estimated=args.sigma_estimated,
            k=k,
        )
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UndefinedBoundError as exc:
        print(f"undefined bound: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED_BOUND
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "bounds",
        **report.to_dict(),
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        opts = _merge_simulate_options(args)
        cfg = SimConfig(
            n=opts["n"],
            p=opts["p"],
            s0=opts["s0"],
            beta_amplitude=opts["beta_amplitude"],
            sigma=opts["sigma"],
            h=opts["h"],
            delta=opts["delta"],
            error_dist=opts["error_dist"],
            contamination_fraction=opts["contamination_fraction"],
            contamination_magnitude=opts["contamination_magnitude"],
            n_trials=opts["trials"],
            seed=opts["seed"],
        )
        settings = SolverSettings(n_starts=opts["n_starts"], tol=opts["tol"])
    except (ValueError, KeyError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    n_jobs = _n_jobs_from_env()
    if cfg.contamination_fraction > 0:
        report = run_contamination_comparison(
            cfg,
            settings,
            lambda1=opts["comparison_lambda1"],
            lambda2=opts["comparison_lambda2"],
            n_jobs=n_jobs,
        )
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "mode": "robustness_comparison",
            **report.to_dict(),
        }
        _emit_json(payload, args.output)
        if report.excluded_trials > 0.05 * cfg.n_trials:
            print(
                f"solver failure: {report.excluded_trials}/{cfg.n_trials} trials excluded",
                file=sys.stderr,
            )
            return EXIT_SOLVER
        return EXIT_OK
    try:
        report = run_coverage_experiment(
            cfg,
            settings,
            lambda2=opts["lambda2"],
            sigma_mode=opts["sigma_mode"],
            n_jobs=n_jobs,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "mode": "coverage",
        **report.to_dict(),
    }
    _emit_json(payload, args.output)
    if args.per_trial_csv:
        _write_per_trial_csv(args.per_trial_csv, report)
    if args.plot_data:
        _write_plot_data(args.plot_data, report)
    if report.excluded_trials > 0.05 * cfg.n_trials:
        print(
            f"solver failure: {report.excluded_trials}/{cfg.n_trials} trials excluded",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    return EXIT_OK


_SIM_DEFAULTS = {
    "n": 100,
    "p": 20,
    "s0": 3,
    "beta_amplitude": 1.0,
    "sigma": 1.0,
    "h": None,
    "delta": 0.1,
    "error_dist": "gaussian",
    "contamination_fraction": 0.0,
    "contamination_magnitude": 0.0,
    "trials": 100,
    "seed": 0,
    "n_starts": 20,
    "tol": 1e-8,
    "lambda2": None,
    "sigma_mode": "known",
    "comparison_lambda1": 0.01,
    "comparison_lambda2": 0.01,
}


def _merge_simulate_options(args) -> dict:
    """builtin defaults < config file < explicit flags."""
    opts = dict(_SIM_DEFAULTS)
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(file_opts) - set(_SIM_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    for key in _SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return opts


def _write_per_trial_csv(path: str, report) -> None:
    lines = ["trial,claim,held,observed,threshold"]
    for t in report.trials:
        for name, rec in t.claims.items():
            obs = rec.get("observed")
            thr = rec.get("threshold")
            lines.append(
                f"{t.trial},{name},{int(rec['held'])},"
                f"{'' if obs is None else repr(obs)},{'' if thr is None else repr(thr)}"
            )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _write_plot_data(path: str, report) -> None:
    rows = sorted(
        ((t.realized_error, t.bound_value, t.trial) for t in report.trials),
        key=lambda r: r[0],
    )
    lines = ["rank,trial,realized_error,bound"]
    for rank, (realized, bound, trial) in enumerate(rows, start=1):
        lines.append(f"{rank},{trial},{realized!r},{bound!r}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_verify_tails(args) -> int:
    try:
        if args.reps < 1_000 or args.sg_reps < 1_000:
            raise ValueError("repetition counts must be at least 1000")
        h_values = [int(v) for v in args.chi_h.split(",") if v.strip()]
        t_values = [float(v) for v in args.chi_t.split(",") if v.strip()]
        if not h_values or not t_values:
            raise ValueError("empty chi-square grid")
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cells = []
    all_passed = True
    for h in h_values:
        for t in t_values:
            res = chi_square_tail_check(h, t, reps=args.reps, seed=args.seed)
            se = math.sqrt(res.bound * (1.0 - res.bound) / args.reps)
            for kind, rate in (("upper", res.upper_rate), ("lower", res.lower_rate)):
                passed = rate <= res.bound + 3.0 * se
                all_passed &= passed
                cells.append(
                    {
                        "check": f"chi_square_{kind}",
                        "h": h,
                        "t": t,
                        "empirical_rate": rate,
                        "level": res.bound,
                        "se": se,
                        "passed": passed,
                    }
                )
    sg = subgaussian_max_check(
        n=args.sg_n,
        p=args.sg_p,
        h=args.sg_h,
        sigma=args.sg_sigma,
        delta=args.sg_delta,
        reps=args.sg_reps,
        seed=args.seed,
    )
    sg_se = math.sqrt(sg.target_level * (1.0 - sg.target_level) / args.sg_reps)
    sg_pass = sg.empirical_rate <= sg.target_level + 3.0 * sg_se
    all_passed &= sg_pass
    cells.append(
        {
            "check": "subgaussian_max",
            "n": sg.n,
            "p": sg.p,
            "h": sg.h,
            "empirical_rate": sg.empirical_rate,
            "level": sg.target_level,
            "se": sg_se,
            "passed": sg_pass,
        }
    )
    header = f"{'check':<20}{'params':<16}{'rate':>12}{'level':>12}{'pass':>7}"
    print(header)
    print("-" * len(header))
    for c in cells:
        params = f"h={c.get('h', '')},t={c.get('t', '')}" if "t" in c else f"n={c['n']},p={c['p']}"
        print(
            f"{c['check']:<20}{params:<16}{c['empirical_rate']:>12.5f}"
            f"{c['level']:>12.5f}{'ok' if c['passed'] else 'FAIL':>7}"
        )
    if args.output:
        _emit_json(
            {
                "schema_version": SCHEMA_VERSION,
                "command": "verify-tails",
                "all_passed": all_passed,
                "cells": cells,
            },
            args.output,
        )
    return EXIT_OK if all_passed else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# parser


def _add_csv_flags(sub):
    sub.add_argument("--input", required=True, help="input CSV (header row, numeric, no missing values)")
    sub.add_argument("--response", default=None, help="response column name (default: last column)")
    sub.add_argument(
        "--add-intercept",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="prepend an all-ones intercept column (disable only if the first feature already is one)",
    )
    sub.add_argument("--output", default=None, help="output JSON path (default: stdout)")


def _add_solver_flags(sub):
    sub.add_argument("--h", type=int, default=None, help="rows kept by trimming (default: ceil(0.75*n))")
    sub.add_argument("--tol", type=float, default=1e-8, help="inner solver KKT/convergence tolerance")
    sub.add_argument("--max-iter", type=int, default=10_000, help="inner solver sweep budget")
    sub.add_argument(
        "--penalize-intercept",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include the intercept in both penalties",
    )
    sub.add_argument("--n-starts", type=int, default=500, help="random subset starts for the C-step search")
    sub.add_argument("--seed", type=int, default=0, help="seed for the random starts")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="ltsenet",
        description=(
            "Robust sparse regression via penalized least trimmed squares: "
            "fitting, finite-sample error bounds, and Monte Carlo verification."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser(
        "fit",
        help="fit the trimmed elastic net to a CSV",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_csv_flags(fit)
    _add_solver_flags(fit)
    fit.add_argument("--lambda1", type=float, default=0.0, help="l1 penalty weight")
    fit.add_argument("--lambda2", type=float, default=0.0, help="squared-l2 penalty weight")
    fit.add_argument("--exact", action="store_true", help="enumerate all h-subsets instead of C-steps")
    fit.add_argument("--cap", type=int, default=100_000, help="max subsets for --exact")
    fit.add_argument("--warm-start", default=None, help="previous fit JSON whose 'beta' seeds one chain")
    fit.set_defaults(func=cmd_fit)

    fpath = subs.add_parser(
        "fit-path",
        help="fit along a decreasing lambda1 grid with warm starts",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_csv_flags(fpath)
    _add_solver_flags(fpath)
    fpath.add_argument(
        "--lambda1-grid",
        default=None,
        help="comma-separated decreasing lambda1 values (default: geometric grid from the dead-zone threshold)",
    )
    fpath.add_argument("--grid-size", type=int, default=20, help="points in the automatic grid")
    fpath.add_argument(
        "--lambda1-min-ratio", type=float, default=0.01, help="smallest/largest lambda1 in the automatic grid"
    )
    fpath.add_argument("--lambda2-ratio", type=float, default=0.0, help="lambda2 = ratio * lambda1 at each point")
    fpath.set_defaults(func=cmd_fit_path)

    bounds = subs.add_parser(
        "bounds",
        help="evaluate the closed-form finite-sample bounds",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    bounds.add_argument("--n", type=int, required=True, help="sample size")
    bounds.add_argument("--p", type=int, required=True, help="number of coefficients incl. intercept")
    bounds.add_argument("--h", type=int, required=True, help="rows kept by trimming")
    bounds.add_argument("--sigma", type=float, required=True, help="noise standard deviation")
    bounds.add_argument("--delta", type=float, required=True, help="failure probability, in (0,1)")
    bounds.add_argument("--norm-beta0", type=float, default=None, help="l1 norm of the true coefficients")
    bounds.add_argument("--beta0-file", default=None, help="JSON with the true coefficients (list or {'beta': [...]})")
    bounds.add_argument(
        "--lambda2", type=float, default=None, help="lambda2 override (default: largest admissible; 0 for the lasso regime)"
    )
    bounds.add_argument(
        "--sigma-estimated",
        action="store_true",
        help="use the delta split for an estimated noise scale (6 instead of 4)",
    )
    bounds.add_argument("--s0", type=int, default=None, help="true support size (used to derive k)")
    bounds.add_argument("--k", type=int, default=None, help="incoherence integer (overrides --s0 derivation)")
    bounds.add_argument("--output", default=None, help="output JSON path (default: stdout)")
    bounds.set_defaults(func=cmd_bounds)

    sim = subs.add_parser(
        "simulate",
        help="Monte Carlo verification of the probabilistic claims",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sim.add_argument("--config", default=None, help="JSON file of options (flags override it)")
    sim.add_argument("--n", type=int, default=None, help=f"sample size (default {_SIM_DEFAULTS['n']})")
    sim.add_argument("--p", type=int, default=None, help=f"coefficients incl. intercept (default {_SIM_DEFAULTS['p']})")
    sim.add_argument("--s0", type=int, default=None, help=f"true support size (default {_SIM_DEFAULTS['s0']})")
    sim.add_argument(
        "--beta-amplitude",
        dest="beta_amplitude",
        type=float,
        default=None,
        help=f"magnitude of nonzero true coefficients (default {_SIM_DEFAULTS['beta_amplitude']})",
    )
    sim.add_argument("--sigma", type=float, default=None, help=f"noise scale (default {_SIM_DEFAULTS['sigma']})")
    sim.add_argument("--h", type=int, default=None, help="rows kept by trimming (default ceil(0.75*n))")
    sim.add_argument("--delta", type=float, default=None, help=f"failure probability (default {_SIM_DEFAULTS['delta']})")
    sim.add_argument(
        "--error-dist",
        dest="error_dist",
        choices=["gaussian", "bounded_subgaussian"],
        default=None,
        help=f"error distribution (default {_SIM_DEFAULTS['error_dist']})",
    )
    sim.add_argument(
        "--contamination-fraction",
        dest="contamination_fraction",
        type=float,
        default=None,
        help="fraction of responses replaced by outliers (default 0; > 0 switches to the robustness comparison)",
    )
    sim.add_argument(
        "--contamination-magnitude",
        dest="contamination_magnitude",
        type=float,
        default=None,
        help="outlier shift magnitude (default 0)",
    )
    sim.add_argument("--trials", type=int, default=None, help=f"Monte Carlo trials (default {_SIM_DEFAULTS['trials']})")
    sim.add_argument("--seed", type=int, default=None, help=f"experiment seed (default {_SIM_DEFAULTS['seed']})")
    sim.add_argument(
        "--n-starts",
        dest="n_starts",
        type=int,
        default=None,
        help=f"random starts per trial fit (default {_SIM_DEFAULTS['n_starts']})",
    )
    sim.add_argument("--tol", type=float, default=None, help=f"inner solver tolerance (default {_SIM_DEFAULTS['tol']})")
    sim.add_argument(
        "--lambda2",
        type=float,
        default=None,
        help="lambda2 override for the selection rule (default: largest admissible; 0 for cone-condition studies)",
    )
    sim.add_argument(
        "--sigma-mode",
        dest="sigma_mode",
        choices=["known", "estimated"],
        default=None,
        help=f"use the true sigma or the trimmed residual estimate in slack terms (default {_SIM_DEFAULTS['sigma_mode']})",
    )
    sim.add_argument(
        "--comparison-lambda1",
        dest="comparison_lambda1",
        type=float,
        default=None,
        help=f"lambda1 for the robustness comparison (default {_SIM_DEFAULTS['comparison_lambda1']})",
    )
    sim.add_argument(
        "--comparison-lambda2",
        dest="comparison_lambda2",
        type=float,
        default=None,
        help=f"lambda2 for the robustness comparison (default {_SIM_DEFAULTS['comparison_lambda2']})",
    )
    sim.add_argument("--per-trial-csv", default=None, help="optional CSV with one row per (trial, claim)")
    sim.add_argument("--plot-data", default=None, help="optional CSV of (realized error, bound) per trial, sorted")
    sim.add_argument("--output", default=None, help="output JSON path (default: stdout)")
    sim.set_defaults(func=cmd_simulate)

    tails = subs.add_parser(
        "verify-tails",
        help="Monte Carlo check of the tail inequalities behind the bounds",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    tails.add_argument("--chi-h", default="5,20,100", help="comma-separated chi-square degrees of freedom")
    tails.add_argument("--chi-t", default="1,3", help="comma-separated exponents t (level exp(-t))")
    tails.add_argument("--reps", type=int, default=100_000, help="chi-square repetitions per cell")
    tails.add_argument("--sg-n", type=int, default=100, help="sample size for the max-correlation check")
    tails.add_argument("--sg-p", type=int, default=10, help="columns for the max-correlation check")
    tails.add_argument("--sg-h", type=int, default=75, help="kept rows for the max-correlation check")
    tails.add_argument("--sg-sigma", type=float, default=1.0, help="noise scale for the max-correlation check")
    tails.add_argument("--sg-delta", type=float, default=0.1, help="failure probability for the max-correlation check")
    tails.add_argument("--sg-reps", type=int, default=10_000, help="repetitions for the max-correlation check")
    tails.add_argument("--seed", type=int, default=0, help="seed shared by all checks")
    tails.add_argument("--output", default=None, help="optional JSON results path")
    tails.set_defaults(func=cmd_verify_tails)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
