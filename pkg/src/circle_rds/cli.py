"""Command line front end.

Each subcommand loads a config JSON, applies flag overrides, runs one
experiment or estimator, and writes its outputs plus a run manifest to
the output directory.  CSV files use LF line endings and print floats
with 17 significant digits so values round-trip bit-exactly; undefined
cells (a fit that did not happen) are empty strings.  The manifest is
the single output containing wall-clock timestamps; everything else is
byte-identical across reruns and worker counts.

Exit codes: 0 on success, 2 for config or usage errors, 3 when a
non-finite number reaches an output file.
"""

import argparse
import dataclasses
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .estimators import (holder_exponent, ks_distance_to_uniform,
                         ks_threshold_95, lyapunov_exponent, moment_integral,
                         stationarity_residual, stationary_measure_birkhoff,
                         stationary_measure_push)
from .experiments import (independence_gap_experiment,
                          inclusion_rate_experiment,
                          lifted_repelling_set_test, self_distance_experiment,
                          single_trial_certificate, theorem_a_experiment,
                          theorem_b_density)
from .pingpong import relator_search


class NumericFailure(ArithmeticError):
    """A NaN or infinity was about to reach an output file."""


def _g(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        raise NumericFailure(f"non-finite value {x!r} in output")
    return format(x, ".17g")


def _check_finite(obj, where):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise NumericFailure(f"non-finite value in {where}")
    elif isinstance(obj, dict):
        for v in obj.values():
            _check_finite(v, where)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _check_finite(v, where)


def _write_csv(out_dir, name, header, rows):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return name


def _write_json(out_dir, name, obj):
    _check_finite(obj, name)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return name


def _fit_cells(fit):
    if fit is None:
        return "", "", ""
    return _g(fit.slope), _g(fit.intercept), _g(fit.r_squared)


def _fit_dict(fit):
    if fit is None:
        return None
    out = {"slope": fit.slope, "intercept": fit.intercept,
           "r_squared": fit.r_squared,
           "n_values": list(fit.n_values), "y_values": list(fit.y_values)}
    if fit.stderrs is not None:
        out["stderrs"] = list(fit.stderrs)
    return out


def _report_dict(rep):
    return {
        "name": rep.name,
        "fit_target": rep.fit_target,
        "eps": rep.eps,
        "n_values": list(rep.n_values),
        "trials": rep.trials,
        "successes": list(rep.successes),
        "undetermined": list(rep.undetermined),
        "rates": list(rep.rates),
        "wilson": [list(w) for w in rep.wilson],
        "fit": _fit_dict(rep.fit),
    }


def _emit_rate_csvs(out_dir, name, reports):
    rate_rows, trial_rows = [], []
    for rep in reports:
        slope, intercept, r2 = _fit_cells(rep.fit)
        for i, n in enumerate(rep.n_values):
            lo, hi = rep.wilson[i]
            rate_rows.append([
                _g(rep.eps), str(n), str(rep.trials), str(rep.successes[i]),
                str(rep.undetermined[i]), _g(rep.rates[i]), _g(lo), _g(hi),
                slope, intercept, r2,
            ])
        for t, row in enumerate(rep.statuses):
            for n, status in zip(rep.n_values, row):
                trial_rows.append([_g(rep.eps), str(n), str(t), status])
    files = [
        _write_csv(out_dir, f"{name}_rates.csv",
                   ["eps", "n", "trials", "successes", "undetermined", "rate",
                    "wilson_lo", "wilson_hi", "slope", "intercept",
                    "r_squared"], rate_rows),
        _write_csv(out_dir, f"{name}_trials.csv",
                   ["eps", "n", "trial", "status"], trial_rows),
    ]
    return files


def _estimator_csv(out_dir, name, estimator, n, value, trials, seed):
    row = [estimator, "" if n is None else str(n), _g(value), "",
           "" if trials is None else str(trials), str(seed)]
    return _write_csv(out_dir, name,
                      ["estimator", "n", "value", "stderr", "trials", "seed"],
                      [row])


def _run_theorem_a(cfg, args, out_dir):
    res = theorem_a_experiment(cfg, workers=args.workers)
    files = _emit_rate_csvs(out_dir, "theorem_a", res.reports)
    cert_name = "certificates.jsonl"
    with open(os.path.join(out_dir, cert_name), "w", encoding="utf-8",
              newline="") as fh:
        for eps, n, trial, cert in res.certificates:
            entry = {"eps": eps, "n": n, "trial": trial,
                     "certificate": cert.to_dict()}
            _check_finite(entry, cert_name)
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    files.append(cert_name)
    files.append(_write_json(out_dir, "theorem_a_summary.json", {
        "experiment": "theorem_a",
        "seed": cfg.seed,
        "reports": [_report_dict(r) for r in res.reports],
        "certificates": len(res.certificates),
    }))
    print(f"theorem-a: {len(res.certificates)} certificates, "
          f"rate at n={cfg.n_values[-1]}: "
          + ", ".join(_g(r.rates[-1]) for r in res.reports))
    return files


def _run_density(cfg, args, out_dir):
    res = theorem_b_density(cfg, workers=args.workers)
    rows = [[str(n + 1), "1" if c else "0"]
            for n, c in enumerate(res.certified)]
    files = [_write_csv(out_dir, "density.csv", ["n", "certified"], rows)]
    files.append(_write_json(out_dir, "density_summary.json", {
        "experiment": "density", "seed": cfg.seed, "radius": res.radius,
        "horizon": res.horizon, "certified": sum(res.certified),
        "density": res.density,
    }))
    print(f"density: {_g(res.density)} over n <= {res.horizon}")
    return files


def _run_inclusion(cfg, args, out_dir):
    reports = inclusion_rate_experiment(cfg, workers=args.workers)
    files = _emit_rate_csvs(out_dir, "inclusion", reports)
    files.append(_write_json(out_dir, "inclusion_summary.json", {
        "experiment": "inclusion", "seed": cfg.seed,
        "reports": [_report_dict(r) for r in reports],
    }))
    print("inclusion: rate at n=%d: %s" % (
        cfg.n_values[-1],
        ", ".join(_g(r.rates[-1]) for r in reports)))
    return files


def _run_self_distance(cfg, args, out_dir):
    report = self_distance_experiment(cfg, args.t, workers=args.workers)
    files = _emit_rate_csvs(out_dir, "self_distance", (report,))
    files.append(_write_json(out_dir, "self_distance_summary.json", {
        "experiment": "self_distance", "seed": cfg.seed, "t": args.t,
        "report": _report_dict(report),
    }))
    print(f"self-distance: t={_g(args.t)}, "
          f"rate at n={cfg.n_values[-1]}: {_g(report.rates[-1])}")
    return files


def _run_independence(cfg, args, out_dir):
    res = independence_gap_experiment(cfg, args.bandwidth,
                                      workers=args.workers)
    slope, intercept, r2 = _fit_cells(res.fit)
    rows = [[str(n), _g(v), _g(se), slope, intercept, r2]
            for n, v, se in zip(res.n_values, res.gaps, res.stderrs)]
    files = [_write_csv(out_dir, "independence.csv",
                        ["n", "value", "stderr", "slope", "intercept",
                         "r_squared"], rows)]
    files.append(_write_json(out_dir, "independence_summary.json", {
        "experiment": "independence", "seed": cfg.seed,
        "bandwidth": res.bandwidth, "n_values": list(res.n_values),
        "gaps": list(res.gaps), "stderrs": list(res.stderrs),
        "fit": _fit_dict(res.fit),
    }))
    print(f"independence: gap at n={res.n_values[-1]}: {_g(res.gaps[-1])}")
    return files


def _run_lift_test(cfg, args, out_dir):
    res = lifted_repelling_set_test(cfg, args.degree,
                                    tolerance=args.tolerance,
                                    workers=args.workers)
    rows = [[str(t), _g(h)] for t, h in enumerate(res.hausdorff)]
    files = [_write_csv(out_dir, "lift.csv", ["trial", "hausdorff"], rows)]
    files.append(_write_json(out_dir, "lift_summary.json", {
        "experiment": "lift_test", "seed": cfg.seed, "degree": res.degree,
        "tolerance": args.tolerance, "trials": res.trials,
        "pass_rate": res.pass_rate, "passed": res.passed,
    }))
    print(f"lift-test: degree {res.degree}, pass rate {_g(res.pass_rate)}, "
          + ("passed" if res.passed else "FAILED"))
    return files


def _run_stationary(cfg, args, out_dir):
    horizon = cfg.n_values[-1]
    if args.method == "push":
        nu = stationary_measure_push(cfg.measure_1, cfg.x0, horizon,
                                     cfg.trials, cfg.seed)
        n_col = horizon
    else:
        nu = stationary_measure_birkhoff(cfg.measure_1, cfg.x0, cfg.trials,
                                         cfg.seed)
        n_col = cfg.trials
    rows = [["stationary_" + args.method, str(n_col), _g(v), "",
             str(len(nu)), str(cfg.seed)] for v in nu.samples]
    files = [_write_csv(out_dir, "stationary.csv",
                        ["estimator", "n", "value", "stderr", "trials",
                         "seed"], rows)]
    residual = stationarity_residual(cfg.measure_1, nu, cfg.seed)
    ks_uniform = ks_distance_to_uniform(nu.samples)
    files.append(_write_json(out_dir, "stationary_summary.json", {
        "experiment": "stationary", "seed": cfg.seed, "method": args.method,
        "samples": len(nu), "horizon": horizon,
        "ks_to_uniform": ks_uniform,
        "stationarity_residual": residual,
        "two_sample_threshold_95": ks_threshold_95(len(nu), len(nu)),
    }))
    print(f"stationary ({args.method}): {len(nu)} samples, "
          f"residual {_g(residual)}")
    return files


def _run_holder(cfg, args, out_dir):
    if args.method == "push":
        nu = stationary_measure_push(cfg.measure_1, cfg.x0,
                                     cfg.n_values[-1], cfg.trials, cfg.seed)
    else:
        nu = stationary_measure_birkhoff(cfg.measure_1, cfg.x0, cfg.trials,
                                         cfg.seed)
    r_min = max(1e-3, 10.0 / len(nu))
    radii = np.geomspace(0.1, r_min, 9)
    fit = holder_exponent(nu, radii, centers=args.centers)
    rows = [[_g(r), _g(m), _g(fit.alpha_hat), _g(fit.c_hat)]
            for r, m in zip(fit.radii, fit.masses)]
    files = [_write_csv(out_dir, "holder.csv",
                        ["radius", "mass", "alpha_hat", "c_hat"], rows)]
    files.append(_write_json(out_dir, "holder_summary.json", {
        "experiment": "holder", "seed": cfg.seed, "method": args.method,
        "samples": len(nu), "alpha_hat": fit.alpha_hat, "c_hat": fit.c_hat,
        "atomic": fit.atomic,
    }))
    print(f"holder: alpha_hat {_g(fit.alpha_hat)}"
          + (" (atomic)" if fit.atomic else ""))
    return files


def _run_lyapunov(cfg, args, out_dir):
    value = lyapunov_exponent(cfg.measure_1, cfg.x0, cfg.trials, cfg.seed)
    files = [_estimator_csv(out_dir, "lyapunov.csv", "lyapunov", cfg.trials,
                            value, cfg.trials, cfg.seed)]
    files.append(_write_json(out_dir, "lyapunov_summary.json", {
        "experiment": "lyapunov", "seed": cfg.seed, "samples": cfg.trials,
        "value": value,
    }))
    print(repr(value))
    return files


def _run_moment(cfg, args, out_dir):
    value = moment_integral(cfg.measure_1, args.delta)
    files = [_estimator_csv(out_dir, "moment.csv", "moment", None, value,
                            None, cfg.seed)]
    files.append(_write_json(out_dir, "moment_summary.json", {
        "experiment": "moment", "seed": cfg.seed, "delta": args.delta,
        "value": value,
    }))
    print(repr(value))
    return files


def _run_pingpong_check(cfg, args, out_dir):
    eps = cfg.eps[0] if args.eps is None else args.eps
    n = cfg.n_values[-1] if args.n is None else args.n
    status, cert = single_trial_certificate(cfg, eps, n, args.trial)
    entry = {"eps": eps, "n": n, "trial": args.trial, "status": status,
             "certificate": None if cert is None else cert.to_dict()}
    if args.certificate is not None:
        with open(args.certificate, "r", encoding="utf-8") as fh:
            reference = json.load(fh)
        stored = reference.get("certificate", reference)
        entry["matches_reference"] = (
            cert is not None and stored == cert.to_dict())
    files = [_write_json(out_dir, "pingpong_check.json", entry)]
    extra = ""
    if "matches_reference" in entry:
        extra = (", matches reference" if entry["matches_reference"]
                 else ", DIFFERS from reference")
    print(f"pingpong-check: n={n}, trial={args.trial}: {status}{extra}")
    return files


def _run_relator(cfg, args, out_dir):
    system = cfg.measure_1.system
    if len(system) < 2:
        raise ConfigError(["relator needs at least two generators in "
                           "measure_1"])
    f, g = system.maps[0], system.maps[1]
    found, word = relator_search(f, g, args.max_len, args.probes, args.tol)
    names = None
    if found:
        names = [word.system.letter_name(l) for l in word.letters]
    files = [_write_json(out_dir, "relator_summary.json", {
        "experiment": "relator", "max_len": args.max_len,
        "probes": args.probes, "found": found,
        "word": names, "length": None if word is None else len(word.letters),
    })]
    print(" ".join(names) if found else "no relator found")
    return files


_RUNNERS = {
    "theorem-a": _run_theorem_a,
    "density": _run_density,
    "inclusion": _run_inclusion,
    "self-distance": _run_self_distance,
    "independence": _run_independence,
    "lift-test": _run_lift_test,
    "stationary": _run_stationary,
    "holder": _run_holder,
    "lyapunov": _run_lyapunov,
    "moment": _run_moment,
    "pingpong-check": _run_pingpong_check,
    "relator": _run_relator,
}


def _add_common(sub):
    sub.add_argument("config", help="experiment config JSON")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--workers", type=int, default=1,
                     help="parallel worker processes (results are "
                          "independent of this)")
    sub.add_argument("--out-dir", help="output directory (else config "
                                       "output.dir, else $CIRCLE_RDS_OUT)")
    sub.add_argument("--trials", type=int, help="override trial count")
    sub.add_argument("--n-max", type=int,
                     help="drop horizons above this value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circle-rds",
        description="Random walks on circle homeomorphisms: ping-pong "
                    "certification experiments and estimators.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name in _RUNNERS:
        sub = subs.add_parser(name)
        _add_common(sub)
        if name in ("theorem-a", "inclusion"):
            sub.add_argument("--eps", type=float,
                             help="run a single eps instead of the config "
                                  "list")
        if name == "self-distance":
            sub.add_argument("--t", type=float, default=0.97,
                             help="distance threshold base")
        if name == "independence":
            sub.add_argument("--bandwidth", type=float, default=0.25,
                             help="proximity kernel bandwidth")
        if name == "lift-test":
            sub.add_argument("--degree", type=int, default=2)
            sub.add_argument("--tolerance", type=float, default=1e-3)
        if name in ("stationary", "holder"):
            sub.add_argument("--method", choices=("push", "birkhoff"),
                             default="push")
        if name == "holder":
            sub.add_argument("--centers", type=int, default=256)
        if name == "moment":
            sub.add_argument("--delta", type=float, default=1.0)
        if name == "pingpong-check":
            sub.add_argument("--eps", type=float)
            sub.add_argument("--n", type=int)
            sub.add_argument("--trial", type=int, default=0)
            sub.add_argument("--certificate",
                             help="stored certificate JSON to compare "
                                  "against")
        if name == "relator":
            sub.add_argument("--max-len", type=int, default=8)
            sub.add_argument("--probes", type=int, default=128)
            sub.add_argument("--tol", type=float, default=1e-9)
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.n_max is not None:
        kept = tuple(n for n in cfg.n_values if n <= args.n_max)
        if not kept:
            raise ConfigError([f"--n-max {args.n_max} leaves no horizons"])
        changes["n_values"] = kept
    if getattr(args, "eps", None) is not None and args.command != "pingpong-check":
        changes["eps"] = (args.eps,)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        loaded = load_config(args.config)
        cfg = _apply_overrides(loaded.config, args)
        out_dir = (args.out_dir or loaded.out_dir
                   or os.environ.get("CIRCLE_RDS_OUT") or "out")
        os.makedirs(out_dir, exist_ok=True)
        files = _RUNNERS[args.command](cfg, args, out_dir)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    manifest = {
        "tool": "circle-rds",
        "version": __version__,
        "subcommand": args.command,
        "config": args.config,
        "config_digest": loaded.digest,
        "seed": cfg.seed,
        "workers": args.workers,
        "started_utc": started,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(files),
    }
    _write_json(out_dir, "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
