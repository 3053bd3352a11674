"""Command-line front end.

    deltaif infer mean --input data.csv --column x
    deltaif infer risk-ratio --p1 0.6 --n1 100 --p2 0.4 --n2 100
    deltaif infer regression-rr --input trial.csv --outcome death \
        --covariates age,treat --profiles 1,1,0/1,0,1
    deltaif diagnose af --theta 0.01 --se 0.05 --x 1 --seed 1
    deltaif experiment clt --distribution poisson --n-values 10,100,1000
    deltaif simulate trial --n 1000 --seed 1972 --output trial.csv

Results go to stdout; errors go to stderr as a JSON object with a
``category`` and the process exits with that category's code.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import estimands as est
from .empirical import Sample
from .errors import DeltaIFError, InputError, ValidationError
from .logit import simulate_mortality_trial
from .resample import bootstrap, clt_experiment


def ingest_csv(path) -> Sample:
    """Read a numeric CSV with a header row into a :class:`Sample`."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows or not any(c.strip() for c in rows[0]):
        raise InputError(f"{path}: missing header row")
    header = [c.strip() for c in rows[0]]
    width = len(header)
    data, ragged, bad = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            ragged.append(lineno)
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            bad.append(lineno)
            continue
        if not all(math.isfinite(v) for v in vals):
            bad.append(lineno)
            continue
        data.append(vals)
    if ragged:
        raise InputError(f"{path}: ragged rows at line(s) {_lines(ragged)}; expected {width} fields")
    if bad:
        raise InputError(f"{path}: non-numeric or missing cell at line(s) {_lines(bad)}")
    if not data:
        raise InputError(f"{path}: no data rows")
    return Sample(np.array(data), tuple(header))


def _lines(nums, limit=10):
    s = ", ".join(str(n) for n in nums[:limit])
    return s + (f" (+{len(nums) - limit} more)" if len(nums) > limit else "")


def _profiles(text):
    try:
        a, b = text.split("/")
        return tuple(float(v) for v in a.split(",")), tuple(float(v) for v in b.split(","))
    except ValueError:
        raise ValidationError(f"profiles must look like '1,1,0/1,0,1', got {text!r}") from None


def _csv_list(text, cast=str):
    try:
        return tuple(cast(v.strip()) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"cannot parse list {text!r}") from None


# ---------------------------------------------------------------- output


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def result_report(kind, res: est.InferenceResult, boot=None, seed=None) -> dict:
    rep = {
        "estimand": kind,
        "estimate": res.estimate,
        "se": res.se,
        "ci": {
            "lower": res.ci.lower,
            "upper": res.ci.upper,
            "level": res.ci.level,
            "scale": res.ci.scale_note,
        },
        "n": res.n,
        "method": res.method,
        "warnings": list(res.warnings),
        "diagnostics": res.diagnostics,
    }
    if boot is not None:
        rep["bootstrap"] = {
            "se": boot.se,
            "ci": {"lower": boot.percentile_ci.lower, "upper": boot.percentile_ci.upper, "level": boot.percentile_ci.level},
            "replicates": boot.replicates,
            "failures": boot.failures,
        }
    if seed is not None:
        rep["seed"] = seed
    return _jsonable(rep)


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, ";".join(_fmt(x, 17) for x in v)
        else:
            yield key, v


def _fmt(v, digits):
    if isinstance(v, bool) or v is None:
        return str(v).lower() if isinstance(v, bool) else ""
    if isinstance(v, float):
        return repr(v) if digits >= 17 else f"{v:.{digits}g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x, digits) for x in v) + "]"
    return str(v)


def emit(report: dict, fmt: str, out) -> None:
    if fmt == "json":
        # repr-based floats round-trip exactly
        out.write(json.dumps(report, indent=2, allow_nan=False) + "\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(report):
            w.writerow([k, _fmt(v, 17)])
    else:
        for k, v in _flatten(report):
            if k.startswith("diagnostics."):
                continue
            out.write(f"{k}: {_fmt(v, 6)}\n")


def export_influence_curve(res: est.InferenceResult, path) -> None:
    if res.influence_curve is None:
        raise ValidationError(f"{res.method} result for this estimand has no influence curve to export")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "influence_value"])
        for i, v in enumerate(res.influence_curve.values):
            w.writerow([i, repr(float(v))])


# ---------------------------------------------------------------- commands

_KIND = {
    "mean": est.MEAN,
    "ratio": est.RATIO,
    "quantile": est.QUANTILE,
    "correlation": est.CORRELATION,
    "regression-rr": est.REGRESSION_RR,
    "risk-ratio": est.RISK_RATIO,
}


def _spec_from_args(args) -> est.EstimandSpec:
    kind = _KIND[args.estimand]
    kw = dict(level=args.level, variance_convention=args.variance_convention, seed=args.seed)
    if kind in (est.MEAN, est.QUANTILE) and args.column:
        kw["columns"] = (args.column,)
    if kind in (est.RATIO, est.CORRELATION) and (args.x or args.y):
        if not (args.x and args.y):
            raise ValidationError("give both --x and --y")
        kw["columns"] = (args.x, args.y)
    if kind == est.QUANTILE:
        if args.p is None:
            raise ValidationError("quantile needs --p")
        kw["p"] = args.p
        kw["bandwidth"] = args.bandwidth
    if kind == est.RATIO:
        kw["denominator_tolerance"] = args.denominator_tolerance
    if kind == est.REGRESSION_RR:
        if not args.profiles:
            raise ValidationError("regression-rr needs --profiles a/b")
        if not args.outcome or not args.covariates:
            raise ValidationError("regression-rr needs --outcome and --covariates")
        kw["columns"] = (args.outcome,) + _csv_list(args.covariates)
        kw["profiles"] = _profiles(args.profiles)
    return est.EstimandSpec(kind, **kw)


def cmd_infer(args, out) -> int:
    spec = _spec_from_args(args)
    boot = None
    if spec.kind == est.RISK_RATIO:
        if args.input:
            raise ValidationError("risk-ratio takes summary parameters, not --input")
        missing = [f for f in ("p1", "n1", "p2", "n2") if getattr(args, f) is None]
        if missing:
            raise ValidationError(f"risk-ratio needs --{', --'.join(missing)}")
        if args.bootstrap:
            raise ValidationError("bootstrap needs individual-level data")
        res = est.risk_ratio_inference(args.p1, args.n1, args.p2, args.n2, spec)
    else:
        if not args.input:
            raise ValidationError("--input is required")
        sample = ingest_csv(args.input)
        res = est.infer(sample, spec)
        if args.bootstrap:
            boot = bootstrap(sample, spec, args.bootstrap, args.seed or 0, workers=args.workers)
    if args.export_if:
        export_influence_curve(res, args.export_if)
    seed = args.seed if (args.seed is not None or boot is not None) else None
    if boot is not None and seed is None:
        seed = 0
    emit(result_report(spec.kind, res, boot, seed), args.format, out)
    return 0


def cmd_diagnose(args, out) -> int:
    spec = est.EstimandSpec(est.AF, exposure=args.x, draws=args.draws, threshold=args.threshold, seed=args.seed)
    d = est.attributable_fraction_diagnostic(args.theta, args.se, args.x, spec)
    report = {
        "estimand": est.AF,
        "estimate": d.estimate,
        "derivative": d.derivative,
        "delta_se": d.delta_se,
        "monte_carlo_se": d.monte_carlo_se,
        "divergence_ratio": d.divergence_ratio,
        "warning": d.warning,
        "warnings": [d.message] if d.warning else [],
        "seed": args.seed,
    }
    emit(report, args.format, out)
    return 0


def cmd_experiment(args, out) -> int:
    rep = clt_experiment(
        args.distribution, _csv_list(args.n_values, int), args.replicates, args.seed or 0,
        param=args.param, repeats=args.repeats,
    )
    if args.export:
        with open(args.export, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "repeat", "ks"])
            for n, r, d in rep.rows():
                w.writerow([n, r, repr(d)])
    report = {
        "experiment": "clt",
        "distribution": rep.distribution,
        "n_values": list(rep.n_values),
        "replicates": rep.replicates,
        "repeats": rep.ks.shape[1],
        "mean_ks": rep.mean_ks,
        "seed": rep.seed,
    }
    emit(_jsonable(report), args.format, out)
    return 0


def cmd_simulate(args, out) -> int:
    s = simulate_mortality_trial(args.n, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(s.columns)
    for row in s.data.astype(int):
        w.writerow(row.tolist())
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltaif", description="Delta-method and influence-function inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "csv", "plain"), default="json")
    fmt.add_argument("--seed", type=int)

    infer = sub.add_parser("infer", help="point estimate, SE and Wald interval")
    isub = infer.add_subparsers(dest="estimand", required=True)
    for name in _KIND:
        p = isub.add_parser(name, parents=[fmt])
        p.add_argument("--input", help="CSV file with a header row")
        p.add_argument("--level", type=float, default=0.95)
        p.add_argument("--variance-convention", choices=("unbiased", "population"), default="unbiased")
        p.add_argument("--bootstrap", type=int, metavar="B")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--export-if", metavar="PATH")
        if name in ("mean", "quantile"):
            p.add_argument("--column")
        if name in ("ratio", "correlation"):
            p.add_argument("--x")
            p.add_argument("--y")
        if name == "ratio":
            p.add_argument("--denominator-tolerance", type=float, default=5.0)
        if name == "quantile":
            p.add_argument("--p", type=float)
            p.add_argument("--bandwidth", type=float)
        if name == "regression-rr":
            p.add_argument("--outcome")
            p.add_argument("--covariates", help="comma-separated column names")
            p.add_argument("--profiles", help="two covariate vectors incl. intercept, e.g. 1,1,0/1,0,1")
        if name == "risk-ratio":
            for f, t in (("p1", float), ("n1", int), ("p2", float), ("n2", int)):
                p.add_argument(f"--{f}", type=t)
        p.set_defaults(func=cmd_infer)

    diag = sub.add_parser("diagnose", help="delta-method failure diagnostics")
    dsub = diag.add_subparsers(dest="diagnostic", required=True)
    af = dsub.add_parser("af", parents=[fmt], help="attributable fraction among the exposed")
    af.add_argument("--theta", type=float, required=True)
    af.add_argument("--se", type=float, required=True)
    af.add_argument("--x", type=float, required=True)
    af.add_argument("--draws", type=int, default=100_000)
    af.add_argument("--threshold", type=float, default=2.0)
    af.set_defaults(func=cmd_diagnose)

    exp = sub.add_parser("experiment", help="simulation experiments")
    esub = exp.add_subparsers(dest="experiment", required=True)
    clt = esub.add_parser("clt", parents=[fmt], help="CLT convergence in KS distance")
    clt.add_argument("--distribution", default="poisson")
    clt.add_argument("--param", type=float, help="poisson rate or bernoulli probability")
    clt.add_argument("--n-values", default="10,100,1000,10000")
    clt.add_argument("--replicates", type=int, default=2000)
    clt.add_argument("--repeats", type=int, default=200)
    clt.add_argument("--export", metavar="PATH", help="per-repeat KS distances as CSV")
    clt.set_defaults(func=cmd_experiment)

    sim = sub.add_parser("simulate", help="generate example datasets")
    ssub = sim.add_subparsers(dest="dataset", required=True)
    trial = ssub.add_parser("trial", help="age/treatment/death trial data")
    trial.add_argument("--n", type=int, default=1000)
    trial.add_argument("--seed", type=int, default=1972)
    trial.add_argument("--output")
    trial.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except DeltaIFError as exc:
        err.write(json.dumps({"error": exc.category, "message": str(exc), "exit_code": exc.exit_code}) + "\n")
        return exc.exit_code


def entry():
    sys.exit(main())
