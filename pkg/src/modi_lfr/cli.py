"""Command-line front end: ``modi-lfr {fit,compare,simulate,sample,curves,ttt}``.

Exit status: 0 success, 2 a fit finished without converging (its result is
still written), 1 any usage, input or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, study
from .core import RNG_ALGORITHM
from .estimation import FitConfig, fit_mle
from .exceptions import ModiError, ScenarioInfeasibleError
from .family import ModelId, get_model
from .gof import gof_report, info_criteria, rank_models

SCHEMA = "modi-lfr/1"
MODEL_CHOICES = [m.value for m in ModelId]

CSV_HELP = {
    "simulate": "CSV columns: scenario," + ",".join(study.SIM_CSV_COLUMNS),
    "sample": "CSV columns: x",
    "curves": "CSV columns: " + ",".join(study.CURVE_COLUMNS),
    "ttt": "CSV columns: p,ttt (plus empirical,theoretical with --pp)",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; status 2 is reserved for non-converged fits
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


# -- serialization -------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
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
    if isinstance(obj, ModelId):
        return obj.name
    return obj


def make_manifest(command: str, argv: list, seeds: dict) -> dict:
    return {
        "command": command,
        "argv": list(argv),
        "seeds": seeds,
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "conventions": {
            "quantile": study.QUANTILE_CONVENTION,
            "kurtosis": study.KURTOSIS_CONVENTION,
            "replicate_seed": study.SEED_CONVENTION,
            "json_floats": "shortest round-trip repr",
        },
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _json_doc(manifest, result) -> str:
    return json.dumps(_clean({"schema": SCHEMA, "manifest": manifest, "result": result}), indent=2) + "\n"


def _emit(args, manifest, result, *, table=None, csv_text=None):
    """Write the chosen representation to ``--out`` or stdout."""
    fmt = args.format
    if fmt == "json":
        text = _json_doc(manifest, result)
    elif fmt == "csv":
        text = csv_text
    else:
        text = table
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        if fmt != "json":
            sidecar = out.with_name(out.name + ".manifest.json")
            sidecar.write_text(json.dumps(_clean({"schema": SCHEMA, "manifest": manifest}), indent=2) + "\n",
                               encoding="utf-8")
    else:
        sys.stdout.write(text)


def _g6(v):
    if v is None:
        return "-"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def _table(headers, rows) -> str:
    cells = [[_g6(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


# -- inputs ----------------------------------------------------------------------

def _load(args):
    if args.data:
        return study.load_dataset(args.data)
    return study.load_file(args.file)


def _parse_floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _params(model_name, text):
    m = get_model(model_name)
    vals = _parse_floats(text, "--params")
    if len(vals) != len(m.param_names):
        raise UsageError(f"--params for {m.id.name} needs {len(m.param_names)} values "
                         f"({', '.join(m.param_names)}), got {len(vals)}")
    return m.params_cls(*vals)


def _fit_config(args):
    return FitConfig(n_starts=args.starts, seed=args.seed)


# -- commands ----------------------------------------------------------------------

def cmd_fit(args, argv):
    d = _load(args)
    fit = fit_mle(args.model, d.values, _fit_config(args), zeta=args.zeta)
    ic = info_criteria(fit.neg2_loglik, fit.k, fit.n)
    result = {"dataset": d.name, "fit": fit.to_dict(), "information_criteria": ic.to_dict()}
    manifest = make_manifest("fit", argv, {"seed": args.seed})
    rows = []
    se = fit.std_errors()
    for name in fit.covariance_names:
        lo, hi = fit.wald_intervals.get(name, (None, None))
        rows.append([name, fit.identified[name], se.get(name), lo, hi])
    table = (f"model {fit.model.name}  n={fit.n}  converged={fit.converged}\n"
             + _table(["param", "estimate", "std_err", "lower", "upper"], rows)
             + _table(["-2logL", "AIC", "BIC", "CAIC", "HQIC"],
                      [[ic.neg2_loglik, ic.aic, ic.bic, ic.caic, ic.hqic]]))
    for note in fit.notes:
        table += f"note: {note}\n"
    _emit(args, manifest, result, table=table)
    return 0 if fit.converged else 2


def cmd_compare(args, argv):
    d = _load(args)
    names = [s.strip().lower() for s in args.models.split(",") if s.strip()]
    bad = [n for n in names if n not in MODEL_CHOICES]
    if bad or not names:
        raise UsageError(f"--models: unknown model(s) {bad}; choose from {MODEL_CHOICES}")
    entries, failures = [], []
    for name in names:
        try:
            fit = fit_mle(name, d.values, _fit_config(args))
            gof = gof_report(d.values, name, fit.params)
            entries.append((fit, gof, info_criteria(fit.neg2_loglik, fit.k, fit.n)))
        except ModiError as exc:
            failures.append({"model": ModelId(name).name, "error": str(exc)})
    ranked = rank_models(entries)
    rows = []
    for rank, (fit, gof, ic) in enumerate(ranked, 1):
        rows.append({
            "rank": rank,
            "model": fit.model.name,
            "estimates": fit.estimates,
            "theta_hat": fit.theta_hat,
            "converged": fit.converged,
            "information_criteria": ic.to_dict(),
            "gof": gof.to_dict(),
            "fit": fit.to_dict(),
        })
    result = {"dataset": d.name, "n": int(len(d)), "ranking": rows, "failures": failures}
    manifest = make_manifest("compare", argv, {"seed": args.seed})
    trows = [[r["rank"], r["model"], r["information_criteria"]["neg2_loglik"], r["information_criteria"]["aic"],
              r["information_criteria"]["bic"], r["information_criteria"]["caic"], r["information_criteria"]["hqic"],
              r["gof"]["ks_stat"], r["gof"]["ks_p"], r["gof"]["cvm_stat"], r["gof"]["cvm_p"],
              r["gof"]["ad_stat"], r["gof"]["ad_p"], r["converged"]] for r in rows]
    table = _table(["rank", "model", "-2logL", "AIC", "BIC", "CAIC", "HQIC", "KS", "KS_p",
                    "CvM", "CvM_p", "AD", "AD_p", "converged"], trows)
    est_rows = [[r["model"], ", ".join(f"{k}={_g6(v)}" for k, v in r["estimates"].items())] for r in rows]
    table += _table(["model", "estimates (beta fixed at reference)"], est_rows)
    for f in failures:
        table += f"{f['model']}: failed: {f['error']}\n"
    _emit(args, manifest, result, table=table)
    return 0 if entries else 1


def cmd_simulate(args, argv):
    base = study.SCENARIOS[args.scenario]
    sizes = tuple(int(v) for v in _parse_floats(args.n, "--n")) if args.n else None
    scenario = base.with_(sample_sizes=sizes, replicates=args.reps, seed=args.seed)
    cells = study.run_simulation(scenario, FitConfig(n_starts=args.starts), n_jobs=args.jobs)
    manifest = make_manifest("simulate", argv, {"seed": scenario.seed})
    result = {"scenario": args.scenario, "true_params": dict(zip(("alpha", "beta", "a", "b"),
                                                                  scenario.true_params.as_tuple())),
              "theta": scenario.true_params.theta, "cells": [c.row() for c in cells]}
    csv_text = study.cells_to_csv(cells, scenario_id=args.scenario)
    _emit(args, manifest, result, csv_text=csv_text, table=csv_text)
    return 0


def cmd_sample(args, argv):
    if args.n < 1:
        raise UsageError(f"-n must be a positive integer, got {args.n}")
    params = _params(args.model, args.params)
    x = get_model(args.model).sample(params, args.n, seed=args.seed)
    manifest = make_manifest("sample", argv, {"seed": args.seed})
    csv_text = "x\n" + "".join(f"{v!r}\n" for v in x.tolist())
    _emit(args, manifest, {"model": get_model(args.model).id.name, "values": x}, csv_text=csv_text,
          table=csv_text)
    return 0


def cmd_curves(args, argv):
    params = _params(args.model, args.params)
    try:
        lo, hi = (float(t) for t in args.range.split(":"))
    except ValueError:
        raise UsageError(f"--range must look like LO:HI, got {args.range!r}") from None
    table = study.curve_grid(args.model, params, lo, hi, args.points)
    manifest = make_manifest("curves", argv, {})
    csv_text = study.curve_to_csv(table)
    _emit(args, manifest, {"model": get_model(args.model).id.name, "columns": table}, csv_text=csv_text,
          table=csv_text)
    return 0


def cmd_ttt(args, argv):
    d = _load(args)
    stats = study.descriptive_stats(d)
    ttt = study.ttt_curve(d)
    result = {"dataset": d.name, "descriptive_stats": stats.to_dict(), "ttt": ttt}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    pp = None
    status = 0
    if args.pp:
        fit = fit_mle(args.pp, d.values, _fit_config(args))
        pp = study.pp_points(d, args.pp, fit.params)
        result["pp"] = {"model": fit.model.name, "estimates": fit.estimates, "points": pp,
                        "converged": fit.converged}
        status = 0 if fit.converged else 2
        w.writerow(["p", "ttt", "empirical", "theoretical"])
        for (p, t), (e, th) in zip(ttt, pp):
            w.writerow([repr(p), repr(t), repr(e), repr(th)])
    else:
        w.writerow(["p", "ttt"])
        for p, t in ttt:
            w.writerow([repr(p), repr(t)])
    manifest = make_manifest("ttt", argv, {"seed": args.seed})
    s = stats
    table = _table(["n", "min", "Q1", "median", "mean", "Q3", "max", "sd", "skewness", "kurtosis"],
                   [[s.n, s.min, s.q1, s.median, s.mean, s.q3, s.max, s.std_dev, s.skewness, s.kurtosis]])
    _emit(args, manifest, result, table=table, csv_text=buf.getvalue())
    return status


# -- parser -------------------------------------------------------------------------

def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", choices=sorted(study.DATASET_SHA256), help="embedded data set")
    src.add_argument("--file", help="text file, one lifetime per line, '#' comments")


def _add_common(p, formats, default):
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=formats, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modi-lfr", description="Modi linear failure rate distribution toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest", help="replay the command recorded in a manifest or JSON output")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit", help="maximum-likelihood fit with Wald intervals")
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    _add_source(p)
    p.add_argument("--zeta", type=float, default=0.05, help="intervals at level 1 - zeta")
    p.add_argument("--starts", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, ["json", "table"], "json")

    p = sub.add_parser("compare", help="fit several models, goodness of fit and ranking")
    _add_source(p)
    p.add_argument("--models", default=",".join(MODEL_CHOICES))
    p.add_argument("--starts", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, ["json", "table"], "json")

    p = sub.add_parser("simulate", help="Monte Carlo bias/MSE study", epilog=CSV_HELP["simulate"])
    p.add_argument("--scenario", type=int, choices=sorted(study.SCENARIOS), required=True)
    p.add_argument("--n", help="comma-separated sample sizes (default 20,50,100,200,500,1000)")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--starts", type=int, default=study.DEFAULT_SIM_FIT.n_starts)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: MODI_LFR_THREADS)")
    _add_common(p, ["csv", "json"], "csv")

    p = sub.add_parser("sample", help="draw random variates", epilog=CSV_HELP["sample"])
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    p.add_argument("--params", required=True, help="natural parameters, comma-separated")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, ["csv", "json"], "csv")

    p = sub.add_parser("curves", help="pdf/cdf/survival/hazard on a grid", epilog=CSV_HELP["curves"])
    p.add_argument("--model", choices=MODEL_CHOICES, required=True)
    p.add_argument("--params", required=True, help="natural parameters, comma-separated")
    p.add_argument("--range", required=True, help="LO:HI")
    p.add_argument("--points", type=int, default=200)
    _add_common(p, ["csv", "json"], "csv")

    p = sub.add_parser("ttt", help="descriptive statistics, TTT and PP points", epilog=CSV_HELP["ttt"])
    _add_source(p)
    p.add_argument("--pp", choices=MODEL_CHOICES, help="also fit this model and emit PP points")
    p.add_argument("--starts", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, ["table", "json", "csv"], "table")
    return parser


COMMANDS = {"fit": cmd_fit, "compare": cmd_compare, "simulate": cmd_simulate,
            "sample": cmd_sample, "curves": cmd_curves, "ttt": cmd_ttt}


def _replay_argv(path) -> list:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    manifest = doc.get("manifest", doc)
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not argv:
        raise UsageError(f"{path}: no argument vector found in manifest")
    return [str(a) for a in argv]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.manifest:
            if args.command:
                raise UsageError("--manifest cannot be combined with a command")
            argv = _replay_argv(args.manifest)
            args = parser.parse_args(argv)
            if args.manifest:
                raise UsageError("a replayed manifest may not itself request a replay")
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        return COMMANDS[args.command](args, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ScenarioInfeasibleError, ModiError, ValueError, OSError, RuntimeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stderr.write(f"modi-lfr: error: {msg}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
