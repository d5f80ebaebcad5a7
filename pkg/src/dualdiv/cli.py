"""Batch front-end: estimation runs, simulation campaigns, verification.

Driven by a TOML config file; the command itself lives in the config so
a run is fully reproducible from one artifact::

    command = "estimate"            # estimate | simulate | verify

    [model]
    name = "gaussian"               # gaussian|poisson|exponential|bernoulli|cauchy

    [divergence]
    gamma = [0.0, 2.0]

    [data]                          # estimate: CSV, one observation per row
    path = "obs.csv"

    [simulation]                    # simulate: seeded replicates
    theta_t = [1.0]
    n = 200
    seeds = [1, 2, 3]

    [tolerances]                    # optional overrides
    "quad.abs_tol" = 1e-9
    "opt.x_tol" = 1e-7

    [output]
    path = "report.csv"
    format = "csv"                  # csv | json

Exit codes: 0 ok, 2 config error, 3 data error, 4 non-convergence
(results are still written, flagged), 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import verify as verify_mod
from .dual import DualCriterion
from .estim import estimate
from .generators import PowerGenerator
from .models import (ExponentialFamily, MeanOutsideRange, NonConvergence,
                     Sample, make_model)
from .numerics import NoFiniteValue, OptimizerSpec, QuadratureSpec

log = logging.getLogger("dualdiv")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4
EXIT_VERIFY_FAILED = 5


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


def load_config(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


_QUAD_KEYS = {"quad.abs_tol": "abs_tol", "quad.rel_tol": "rel_tol",
              "quad.max_subdivisions": "max_subdivisions",
              "quad.tail_mass_tol": "tail_mass_tol",
              "quad.infinite_map": "infinite_map"}
_OPT_KEYS = {"opt.method": "method", "opt.x_tol": "x_tol",
             "opt.f_tol": "f_tol", "opt.max_iters": "max_iters",
             "opt.restarts": "restarts"}


def build_specs(cfg):
    tol = cfg.get("tolerances", {})
    quad_kw, opt_kw = {}, {}
    for key, value in tol.items():
        if key in _QUAD_KEYS:
            quad_kw[_QUAD_KEYS[key]] = value
        elif key in _OPT_KEYS:
            opt_kw[_OPT_KEYS[key]] = value
        else:
            raise ConfigError(f"unknown tolerance key {key!r}")
    try:
        return QuadratureSpec(**quad_kw), OptimizerSpec(**opt_kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _model_from_config(cfg):
    block = cfg.get("model")
    if not isinstance(block, dict) or "name" not in block:
        raise ConfigError("config needs a [model] block with a name")
    hyper = {k: v for k, v in block.items() if k != "name"}
    try:
        return make_model(block["name"], **hyper)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _gammas_from_config(cfg):
    gammas = cfg.get("divergence", {}).get("gamma", [])
    if isinstance(gammas, (int, float)):
        gammas = [gammas]
    if not gammas:
        raise ConfigError("divergence.gamma must be a nonempty list")
    return [float(g) for g in gammas]


def _fmt(value):
    """Shortest round-trip decimal for floats; arrays joined with ';'."""
    if isinstance(value, (np.ndarray, list, tuple)):
        return ";".join(_fmt(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_report(rows, meta, path, fmt, omit_timestamp):
    if not omit_timestamp:
        meta = dict(meta, timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))
    if fmt == "json":
        def default(o):
            if isinstance(o, np.ndarray):
                return o.tolist()
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            return str(o)

        payload = {"meta": meta, "rows": rows}
        text = json.dumps(payload, sort_keys=True, default=default, indent=1)
        _write_text(path, text + "\n")
        return
    # CSV: union of keys, deterministic column order
    cols = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    out = sys.stdout if path is None else open(path, "w", newline="",
                                               encoding="utf-8")
    try:
        writer = csv.writer(out)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    finally:
        if path is not None:
            out.close()


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_sample(cfg, model):
    data = cfg.get("data")
    if not isinstance(data, dict) or "path" not in data:
        raise ConfigError("estimate needs a [data] block with a path")
    try:
        sample = Sample.from_csv(data["path"])
    except FileNotFoundError as exc:
        raise DataError(f"data file not found: {data['path']}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    inside = model.support.contains(sample.observations)
    if not np.all(inside):
        bad = np.flatnonzero(~inside)[:5].tolist()
        raise DataError(f"observations outside model support at rows {bad}")
    return sample


def _estimate_rows(model, gammas, sample, quad, opt):
    rows = []
    any_failed = False
    for gamma in gammas:
        crit = DualCriterion(PowerGenerator(gamma), model, quad)
        try:
            res = estimate(crit, sample, opt)
            rows.append({
                "row_type": "estimate", "gamma": gamma,
                "theta_hat": res.theta_hat, "alpha_hat": res.alpha_hat,
                "criterion_value": res.criterion_value,
                "converged": res.outer_diagnostics.converged
                and res.inner_diagnostics.converged,
                "boundary": res.boundary,
            })
            if not rows[-1]["converged"]:
                any_failed = True
        except NoFiniteValue as exc:
            log.warning("estimation failed for gamma=%s: %s", gamma, exc)
            rows.append({"row_type": "estimate", "gamma": gamma,
                         "theta_hat": "", "alpha_hat": "",
                         "criterion_value": "", "converged": False,
                         "boundary": ""})
            any_failed = True
    if isinstance(model, ExponentialFamily):
        try:
            theta_ml = model.mle(sample)
            rows.append({"row_type": "mle", "gamma": "",
                         "theta_hat": theta_ml, "alpha_hat": "",
                         "criterion_value": "", "converged": True,
                         "boundary": ""})
        except (NonConvergence, MeanOutsideRange) as exc:
            log.warning("MLE failed: %s", exc)
            rows.append({"row_type": "mle", "gamma": "", "theta_hat": "",
                         "alpha_hat": "", "criterion_value": "",
                         "converged": False, "boundary": ""})
            any_failed = True
    return rows, any_failed


def cmd_estimate(cfg, args):
    model = _model_from_config(cfg)
    gammas = _gammas_from_config(cfg)
    if "simulation" in cfg:
        raise ConfigError("estimate takes [data], not [simulation]")
    quad, opt = build_specs(cfg)
    sample = _load_sample(cfg, model)
    rows, failed = _estimate_rows(model, gammas, sample, quad, opt)
    meta = {"command": "estimate", "model": model.label,
            "n": sample.n, "source": sample.provenance.get("source")}
    write_report(rows, meta, args.output, args.format, args.omit_timestamp)
    return EXIT_NONCONVERGENCE if failed else EXIT_OK


def _simulate_one(model, gammas, theta_t, n, seed, quad, opt):
    sample = model.draw_sample(theta_t, n, seed)
    theta_ml = None
    if isinstance(model, ExponentialFamily):
        theta_ml = model.mle(sample)
    rows = []
    for gamma in gammas:
        crit = DualCriterion(PowerGenerator(gamma), model, quad)
        res = estimate(crit, sample, opt)
        row = {"row_type": "replicate", "seed": seed, "gamma": gamma,
               "theta_hat": res.theta_hat,
               "criterion_value": res.criterion_value,
               "converged": res.outer_diagnostics.converged}
        if theta_ml is not None:
            row["theta_ml"] = theta_ml
            row["deviation"] = float(np.max(np.abs(res.theta_hat - theta_ml)))
        rows.append(row)
    return rows


def cmd_simulate(cfg, args):
    model = _model_from_config(cfg)
    gammas = _gammas_from_config(cfg)
    if "data" in cfg:
        raise ConfigError("simulate takes [simulation], not [data]")
    sim = cfg.get("simulation")
    if not isinstance(sim, dict):
        raise ConfigError("simulate needs a [simulation] block")
    try:
        theta_t = np.atleast_1d(np.asarray(sim["theta_t"], dtype=float))
        n = int(sim["n"])
        seeds = [int(s) for s in sim["seeds"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad [simulation] block: {exc}") from exc
    if n < 1 or not seeds:
        raise ConfigError("simulation needs n >= 1 and a nonempty seed list")
    quad, opt = build_specs(cfg)

    def work(seed):
        return _simulate_one(model, gammas, theta_t, n, seed, quad, opt)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            per_seed = list(pool.map(work, seeds))
    else:
        per_seed = [work(s) for s in seeds]
    rows = [row for chunk in per_seed for row in chunk]
    # summary: worst deviation from the MLE per gamma, when defined
    for gamma in gammas:
        devs = [r["deviation"] for r in rows
                if r["row_type"] == "replicate" and r["gamma"] == gamma
                and "deviation" in r]
        if devs:
            rows.append({"row_type": "summary", "seed": "", "gamma": gamma,
                         "max_deviation": max(devs)})
    meta = {"command": "simulate", "model": model.label,
            "theta_t": theta_t, "n": n, "seeds": seeds}
    write_report(rows, meta, args.output, args.format, args.omit_timestamp)
    return EXIT_OK


def cmd_verify(cfg, args):
    block = cfg.get("verify", {})
    quad, opt = build_specs(cfg)
    kwargs = {}
    if "checks" in block:
        kwargs["checks"] = tuple(block["checks"])
    if "gammas" in block:
        kwargs["gammas"] = tuple(float(g) for g in block["gammas"])
    if "families" in block:
        kwargs["families"] = tuple(block["families"])
    if "n" in block:
        kwargs["n"] = int(block["n"])
    if "seed" in block:
        kwargs["seed"] = int(block["seed"])
    try:
        reports = verify_mod.run_default_suite(spec=opt, **kwargs)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.format == "json":
        text = "\n".join(r.to_json() for r in reports) + "\n"
        _write_text(args.output, text)
    else:
        rows = [{"check": r.name, "model": r.inputs.get("model", ""),
                 "generator": r.inputs.get("generator", ""),
                 "passed": r.passed, "skipped": r.skipped,
                 "reason": r.reason} for r in reports]
        write_report(rows, {"command": "verify"}, args.output,
                     args.format, args.omit_timestamp)
    for r in reports:
        log.info("%-20s %-12s %-14s %s", r.name, r.inputs.get("model", ""),
                 r.inputs.get("generator", ""),
                 "PASS" if r.passed else ("SKIP" if r.skipped else "FAIL"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualdiv",
        description="Minimum dual divergence estimation runs from a "
                    "TOML config.")
    parser.add_argument("--config", required=True, help="TOML config file")
    parser.add_argument("--output", default=None,
                        help="report path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default from config, else csv)")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel workers for simulation seeds")
    parser.add_argument("--log-level", default="WARNING")
    parser.add_argument("--omit-timestamp", action="store_true",
                        help="suppress the timestamp for byte-identical "
                             "reports")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        command = cfg.get("command")
        if command not in ("estimate", "simulate", "verify"):
            raise ConfigError(
                f"command must be estimate, simulate or verify, got {command!r}")
        out_block = cfg.get("output", {})
        if args.output is None:
            args.output = out_block.get("path")
        if args.format is None:
            args.format = out_block.get("format", "csv")
        if args.format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {args.format!r}")
        handler = {"estimate": cmd_estimate, "simulate": cmd_simulate,
                   "verify": cmd_verify}[command]
        return handler(cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except (NonConvergence, MeanOutsideRange, NoFiniteValue) as exc:
        log.error("estimation did not converge: %s", exc)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
