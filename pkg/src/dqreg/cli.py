"""Command-line interface: ``dqreg {fit,quantiles,bootstrap,simulate,diagnose}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure. JSON goes to ``--out`` (or stdout) and a readable
table is printed with ``--format text``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import fields, replace

import numpy as np

from .copula import CopulaSpec, FAMILIES, _canonical
from .fitter import FitConfig, FitError, FitResult, fit
from .inference import QuantileRequest, bootstrap_se, h_limit_diagnostic, predict_quantiles
from .likelihood import Dataset
from .margins import CMarginParams, NormalTMargin, UniformCMargin
from .simulate import ScenarioConfig, format_table, get_scenario, run_scenario

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

log = logging.getLogger("dqreg")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- data


def read_csv(path: str, log_time: bool = False, standardize: bool = False):
    """Read ``y``, ``delta`` and numeric covariate columns from a CSV file.

    Returns
    -------
    (Dataset, dict)
        The data and ingestion metadata (covariate names, standardisation
        constants).

    Raises
    ------
    DataError
        For missing columns or invalid values; the message names the data row
        (1-based, header excluded).
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        missing = [c for c in ("y", "delta") if c not in header]
        if missing:
            raise DataError(f"missing required column(s): {', '.join(missing)}")
        iy, idl = header.index("y"), header.index("delta")
        cov_idx = [i for i in range(len(header)) if i not in (iy, idl)]
        ys, ds, xs = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, found {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"row {row_no}: non-numeric value") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"row {row_no}: non-finite value")
            if vals[idl] not in (0.0, 1.0):
                raise DataError(f"row {row_no}: delta must be 0 or 1, found {row[idl].strip()}")
            y = vals[iy]
            if log_time:
                if y <= 0:
                    raise DataError(f"row {row_no}: --log-time needs positive y, found {y}")
                y = math.log(y)
            ys.append(y)
            ds.append(int(vals[idl]))
            xs.append([vals[i] for i in cov_idx])
    if not ys:
        raise DataError(f"{path} has no data rows")
    cov = np.array(xs, dtype=float).reshape(len(ys), len(cov_idx))
    meta = {"covariates": [header[i] for i in cov_idx], "log_time": log_time, "standardize": standardize}
    if standardize and cov.shape[1]:
        mean = cov.mean(axis=0)
        sd = cov.std(axis=0, ddof=1) if cov.shape[0] > 1 else np.zeros(cov.shape[1])
        if np.any(sd == 0):
            raise DataError("cannot standardise a constant covariate")
        cov = (cov - mean) / sd
        meta["center"], meta["scale"] = mean.tolist(), sd.tolist()
    return Dataset.from_covariates(np.array(ys), np.array(ds), cov), meta


# ---------------------------------------------------------------- config

FIT_KEYS = {f.name for f in fields(FitConfig)}
SECTIONS = {
    "fit": FIT_KEYS,
    "data": {"log_time", "standardize"},
    "quantiles": {"levels", "points"},
    "bootstrap": {"B"},
    "simulate": {"scenario", "reps"},
    "diagnose": {"family", "theta", "t", "c", "x", "direction"},
}
TOP_KEYS = set(SECTIONS) | {"seed"}


def load_config(path: str | None) -> dict:
    """Read and validate a JSON run config; an emitted result with a ``config`` member is accepted too."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "config" in doc:
        doc = doc["config"]
    validate_config(doc)
    return doc


def validate_config(doc) -> None:
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for sec, allowed in SECTIONS.items():
        if sec not in doc:
            continue
        if sec == "simulate" and isinstance(doc[sec], dict) and "scenario" in doc[sec]:
            scen = doc[sec]["scenario"]
            bad = set(doc[sec]) - allowed
            if isinstance(scen, dict):
                bad |= set(scen) - {f.name for f in fields(ScenarioConfig)}
                if isinstance(scen.get("fit"), dict):
                    bad |= set(scen["fit"]) - FIT_KEYS
        else:
            if not isinstance(doc[sec], dict):
                raise UsageError(f"config section {sec!r} must be an object")
            bad = set(doc[sec]) - allowed
        if bad:
            raise UsageError(f"unknown key(s) in {sec!r}: {', '.join(sorted(bad))}")


def resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DQREG_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DQREG_SEED must be an integer, got {env!r}") from None
    return int(cfg.get("seed", 0))


def resolve_fit_config(args, cfg: dict, seed: int) -> FitConfig:
    d = dict(cfg.get("fit", {}))
    if args.copula is not None:
        d["family"] = args.copula
    if args.hetero is not None:
        d["hetero"] = args.hetero
    if args.lam is not None:
        d["lambda_fixed"] = None if args.lam == "free" else _float(args.lam, "--lambda")
    if args.max_degree is not None:
        d["max_degree"] = args.max_degree
    if args.starts is not None:
        d["n_starts"] = args.starts
    if args.grid_starts is not None:
        d["grid_starts"] = args.grid_starts
    d["seed"] = seed
    if d.get("hetero") is False and d.get("lambda_fixed") is None:
        d["lambda_fixed"] = 0.5
    try:
        return FitConfig(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _float(text, what):
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{what} expects a number, got {text!r}") from None


def resolve_request(args, cfg: dict) -> QuantileRequest:
    q = dict(cfg.get("quantiles", {}))
    if getattr(args, "levels", None):
        q["levels"] = [_float(v, "--levels") for v in args.levels.split(",")]
    if getattr(args, "x", None):
        q["points"] = [[_float(v, "--x") for v in pt.split(",")] for pt in args.x]
    try:
        return QuantileRequest(**q)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _data_flags(args, cfg):
    d = cfg.get("data", {})
    log_time = bool(args.log_time or d.get("log_time", False))
    standardize = bool(args.standardize or d.get("standardize", False))
    return log_time, standardize


# ---------------------------------------------------------------- output


def _clean(obj):
    """Make an object JSON-safe: arrays to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(doc: dict, args, text: str | None = None) -> None:
    payload = json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    if args.format == "text" and text is not None:
        sys.stdout.write(text + "\n")
    elif not args.out:
        sys.stdout.write(payload)


def _config_echo(fc: FitConfig, seed: int, log_time: bool, standardize: bool, extra: dict | None = None) -> dict:
    out = {"seed": seed, "fit": fc.to_dict(), "data": {"log_time": log_time, "standardize": standardize}}
    if extra:
        out.update(extra)
    return out


def _fit_summary(res: FitResult) -> str:
    pr = res.params()
    lines = [
        f"copula {pr['copula']['family']}  theta {pr['copula']['theta']:.4f}  tau {pr['copula']['tau']:.4f}",
        f"loglik {res.loglik:.3f}  AIC {res.aic:.3f}  q {res.q}  degrees {res.degrees}",
    ]
    for name, v in zip(res.layout.names, res.values):
        lines.append(f"  {name:<14}{v: .5f}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args, cfg)
    fc = resolve_fit_config(args, cfg, seed)
    log_time, standardize = _data_flags(args, cfg)
    data, meta = read_csv(args.csv, log_time, standardize)
    log.info("fitting n=%d p=%d", data.n, data.p)
    res = fit(data, fc)
    doc = res.to_dict()
    doc["config"] = _config_echo(fc, seed, log_time, standardize)
    doc["data"] = {"n": data.n, "p": data.p, "uncensored": int(data.delta.sum()), **meta}
    emit(doc, args, _fit_summary(res))
    return 0


def _quantile_table(request: QuantileRequest, grid) -> str:
    lines = [f"{'p':>6}  " + "  ".join(f"{'x=' + ','.join('%g' % v for v in pt):>12}" for pt in request.points)]
    for i, p in enumerate(request.levels):
        lines.append(f"{p:>6g}  " + "  ".join(f"{grid[i, j]:12.4f}" for j in range(len(request.points))))
    return "\n".join(lines)


def cmd_quantiles(args) -> int:
    try:
        with open(args.fit_json) as fh:
            doc = json.load(fh)
        res = FitResult.from_dict(doc)
    except OSError as exc:
        raise DataError(f"cannot read {args.fit_json}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{args.fit_json} is not a fit result: {exc}") from None
    request = resolve_request(args, {})
    try:
        grid = predict_quantiles(res, request)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = {
        "quantiles": [
            {"p": p, "x": list(pt), "value": float(grid[i, j])}
            for i, p in enumerate(request.levels)
            for j, pt in enumerate(request.points)
        ],
        "config": {"quantiles": {"levels": list(request.levels), "points": [list(pt) for pt in request.points]}},
    }
    emit(out, args, _quantile_table(request, grid))
    return 0


def cmd_bootstrap(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args, cfg)
    fc = resolve_fit_config(args, cfg, seed)
    log_time, standardize = _data_flags(args, cfg)
    request = resolve_request(args, cfg)
    B = args.B if args.B is not None else int(cfg.get("bootstrap", {}).get("B", 100))
    data, meta = read_csv(args.csv, log_time, standardize)
    boot = bootstrap_se(data, fc, B, seed, request, n_jobs=args.threads)
    doc = boot.to_dict()
    doc["config"] = _config_echo(
        fc,
        seed,
        log_time,
        standardize,
        {
            "bootstrap": {"B": B},
            "quantiles": {"levels": list(request.levels), "points": [list(pt) for pt in request.points]},
        },
    )
    doc["data"] = {"n": data.n, "p": data.p, **meta}
    lines = [f"{k:<12}{v:.5f}" for k, v in zip(boot.names, boot.param_se)]
    lines.append(_quantile_table(request, boot.quantile_se))
    emit(doc, args, "\n".join(lines))
    return 0


def _scenario(args, cfg) -> ScenarioConfig:
    sim = cfg.get("simulate", {})
    spec = args.scenario if args.scenario is not None else sim.get("scenario", "BasisHet")
    if isinstance(spec, dict):
        try:
            return ScenarioConfig.from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid scenario: {exc}") from None
    if spec.endswith(".json"):
        doc = load_config(spec)
        return _scenario(argparse.Namespace(scenario=None), doc)
    try:
        return get_scenario(spec)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args, cfg)
    sc = _scenario(args, cfg)
    over = {}
    if args.starts is not None:
        over["n_starts"] = args.starts
    if args.grid_starts is not None:
        over["grid_starts"] = args.grid_starts
    if args.max_degree is not None:
        over["max_degree"] = args.max_degree
    if over:
        sc = replace(sc, fit=replace(sc.fit, **over))
    if args.n is not None:
        sc = replace(sc, n=args.n)
    reps = args.reps if args.reps is not None else int(cfg.get("simulate", {}).get("reps", 50))
    if reps < 2:
        raise UsageError("--reps must be at least 2")
    records = run_scenario(sc, reps, seed=seed, n_jobs=args.threads)
    doc = {"records": records, "config": {"seed": seed, "simulate": {"scenario": sc.to_dict(), "reps": reps}}}
    emit(doc, args, format_table(records))
    return 0


DIAGNOSE_PRESETS = {
    # normal/normal margins sharing the first scenario's regression lines
    "frank": {"family": "frank", "theta": 5.74, "direction": "lower"},
    "independence": {"family": "independence", "theta": 0.0, "direction": "lower"},
    # T has a lighter lower tail than C
    "clayton": {
        "family": "clayton",
        "theta": 2.0,
        "t": {"beta": [2.8, 0.6], "gamma": [math.log(0.2), 0.0]},
        "c": {"alpha": [3.15, 0.45], "sigma_c": 0.8},
        "direction": "lower",
    },
    # censoring bounded above
    "gumbel": {
        "family": "gumbel",
        "theta": 2.0,
        "c": {"alpha": [3.15, 0.45], "half_width": 2.0},
        "direction": "upper",
    },
}
_DIAG_DEFAULT = {
    "t": {"beta": [2.8, 0.6], "gamma": [-1.5, 0.45]},
    "c": {"alpha": [3.15, 0.45], "sigma_c": 0.8},
    "x": [1.0, 2.0],
}


def diagnose_from_config(d: dict):
    d = {**_DIAG_DEFAULT, **d}
    fam = _canonical(d["family"])
    cop = CopulaSpec(fam, float(d.get("theta", 0.0)))
    tp = NormalTMargin(d["t"]["beta"], d["t"]["gamma"])
    c = d["c"]
    cp = UniformCMargin(c["alpha"], c["half_width"]) if "half_width" in c else CMarginParams(c["alpha"], c["sigma_c"])
    return h_limit_diagnostic(cop, tp, cp, np.asarray(d["x"], dtype=float), d.get("direction", "lower")), d


def cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    if args.target is not None:
        key = args.target.lower()
        if key.endswith(".json"):
            d = load_config(args.target).get("diagnose", {})
        elif key in ("indep",):
            d = DIAGNOSE_PRESETS["independence"]
        elif key in DIAGNOSE_PRESETS:
            d = DIAGNOSE_PRESETS[key]
        else:
            raise UsageError(f"unknown diagnose target {args.target!r}; use one of {', '.join(DIAGNOSE_PRESETS)}")
    else:
        d = cfg.get("diagnose", DIAGNOSE_PRESETS["frank"])
    d = dict(d)
    if args.theta is not None:
        d["theta"] = args.theta
    if args.direction is not None:
        d["direction"] = args.direction
    try:
        diag, resolved = diagnose_from_config(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid diagnose config: {exc}") from None
    doc = diag.to_dict()
    doc["config"] = {"diagnose": resolved}
    v = diag.verdicts
    text = "\n".join(
        [f"{resolved['family']} theta={resolved.get('theta', 0.0)} direction={diag.direction}"]
        + [f"{'y':>10}{'h_T|C':>14}{'h_C|T':>14}"]
        + [f"{y:10.3f}{a:14.4e}{b:14.4e}" for y, a, b in zip(diag.y, diag.h_t_given_c, diag.h_c_given_t)]
        + [f"h_T|C {v['h_t_given_c']}, h_C|T {v['h_c_given_t']}"]
    )
    emit(doc, args, text)
    return 0


# ---------------------------------------------------------------- parser


def _fit_flags(p):
    p.add_argument("--copula", choices=sorted(set(FAMILIES) | {"indep"}), help="copula family")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--hetero", dest="hetero", action="store_const", const=True, help="covariate-dependent scale")
    g.add_argument("--homo", dest="hetero", action="store_const", const=False, help="constant scale (fixes lambda)")
    p.add_argument("--lambda", dest="lam", metavar="V|free", help="fixed lambda value, or 'free' to estimate it")
    p.add_argument("--max-degree", type=int, help="upper bound of the Laguerre degree grid")
    p.add_argument("--starts", type=int, help="number of starts per step")
    p.add_argument("--grid-starts", type=int, help="starts per degree pair (defaults to --starts)")


def _data_opts(p):
    p.add_argument("--log-time", action="store_true", help="take the natural log of y on ingestion")
    p.add_argument("--standardize", action="store_true", help="z-score the covariates")


def _quantile_flags(p):
    p.add_argument("--levels", help="comma-separated quantile levels")
    p.add_argument("--x", action="append", help="comma-separated covariate point (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides DQREG_SEED and the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for replications")
    common.add_argument("--out", help="write JSON here")
    common.add_argument("--format", choices=("json", "text"), default="json", help="stdout format")
    common.add_argument("--config", help="JSON run config")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="dqreg", description="Quantile regression under dependent censoring.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="fit a model to a CSV file")
    p.add_argument("csv")
    _fit_flags(p)
    _data_opts(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantiles", parents=[common], help="conditional quantiles from a fit JSON")
    p.add_argument("fit_json")
    _quantile_flags(p)
    p.set_defaults(func=cmd_quantiles)

    p = sub.add_parser("bootstrap", parents=[common], help="bootstrap standard errors")
    p.add_argument("csv")
    p.add_argument("--B", type=int, help="number of replications")
    _fit_flags(p)
    _data_opts(p)
    _quantile_flags(p)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", parents=[common], help="replication study of a scenario")
    p.add_argument("scenario", nargs="?", help="preset name (e.g. basis-het) or scenario JSON")
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int, help="override the sample size")
    p.add_argument("--max-degree", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--grid-starts", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", parents=[common], help="tail behaviour of the h-functions")
    p.add_argument("target", nargs="?", help="family preset or diagnose JSON")
    p.add_argument("--theta", type=float)
    p.add_argument("--direction", choices=("lower", "upper"))
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("dqreg: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dqreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"dqreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"dqreg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining value errors come from the data reaching the model
        print(f"dqreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
