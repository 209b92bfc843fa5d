"""Batch front end: load a config, run simulations and analyses, emit CSV/JSON.

Exit codes: 0 success, 2 validation error, 3 numerical failure (escape or
non-convergence, or an analyze run with zero findings), 4 I/O error.
Data files are deterministic (no timestamps); the run manifest carries the
wall clock.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import (AnalysisError, boundedness_scan, find_invariant_curve,
                       find_periodic_orbit, rotation_number)
from .flow import EscapeError, StepUnderflowError, flow_map
from .model import ConfigError, config_hash, load_config
from .poincare import (OriginGuardError, PoincarePoint, poincare_map,
                       twist_profile)
from .special import PhaseState, compute_special_functions, to_phase

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _fmt(v):
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_seed_grid(spec):
    """'lambda=1:100:log:20,theta=0:1:8' -> list of (lam, theta) pairs.

    lambda: start:stop:{lin|log}:count (inclusive endpoints);
    theta:  start:stop:count (stop exclusive).
    """
    lam_part = theta_part = None
    for chunk in spec.split(","):
        key, _, val = chunk.partition("=")
        if key == "lambda":
            lam_part = val
        elif key == "theta":
            theta_part = val
        else:
            raise ConfigError("unknown seed-grid key %r" % key)
    if lam_part is None or theta_part is None:
        raise ConfigError("seed-grid needs both lambda=... and theta=...")
    try:
        a, b, scale, cnt = lam_part.split(":")
        a, b, cnt = float(a), float(b), int(cnt)
        if scale == "log":
            lams = np.geomspace(a, b, cnt)
        elif scale == "lin":
            lams = np.linspace(a, b, cnt)
        else:
            raise ValueError(scale)
        ta, tb, tc = theta_part.split(":")
        thetas = np.linspace(float(ta), float(tb), int(tc), endpoint=False)
    except (ValueError, TypeError) as exc:
        raise ConfigError("malformed seed-grid %r: %s" % (spec, exc)) from exc
    return [(float(l), float(t)) for l in lams for t in thetas]


def _manifest(command, config, params, outputs, started):
    for p in outputs:
        if not (os.path.exists(p) and os.path.getsize(p) > 0):
            raise IOError("declared output %s missing or empty" % p)
    return {
        "command": command,
        "config_hash": config_hash(config) if config is not None else None,
        "parameters": params,
        "outputs": [os.path.basename(p) for p in outputs],
        "duration_s": time.time() - started,
        "version": __version__,
    }


# --- commands ---------------------------------------------------------------

def cmd_simulate(config, out_dir, t_end, seeds, sf):
    started = time.time()
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    escaped = []
    for idx, (lam, theta) in enumerate(seeds):
        x, y = to_phase(sf, _aa(lam, theta))
        try:
            _, traj = flow_map(config, PhaseState(0.0, x, y), t_end, record=True)
        except (EscapeError, StepUnderflowError) as exc:
            escaped.append({"seed_index": idx, "error": str(exc)})
            continue
        tp = os.path.join(out_dir, "trajectory_%03d.csv" % idx)
        ep = os.path.join(out_dir, "impulses_%03d.csv" % idx)
        traj.write_csv(tp, ep)
        outputs.extend([tp, ep])
    man = _manifest("simulate", config,
                    {"t_end": t_end, "seeds": seeds, "escaped": escaped},
                    outputs, started)
    man["status"] = "escaped" if escaped else "ok"
    _write_json(os.path.join(out_dir, "manifest_simulate.json"), man)
    return man, EXIT_NUMERICAL if escaped else EXIT_OK


def _aa(lam, theta):
    from .special import ActionAngle
    return ActionAngle(lam, theta)


def cmd_twist(config, out_dir, lam_lo, lam_hi, grid_size, sf):
    started = time.time()
    os.makedirs(out_dir, exist_ok=True)
    grid = np.geomspace(lam_lo, lam_hi, grid_size)
    prof = twist_profile(config, sf, grid)
    csv_path = os.path.join(out_dir, "twist_profile.csv")
    prof.write_csv(csv_path)
    verdict = {
        "sign_ok_everywhere": bool(np.all(prof.sign_ok)),
        "sign_ok_count": int(np.sum(prof.sign_ok)),
        "degenerate": prof.degenerate,
        "bracket": prof.bracket,
        "gamma": prof.gamma,
        "twist_bound": prof.twist_bound,
        "bound_ok_top_decade": prof.bound_ok_top_decade,
        "monotone": prof.monotone,
        "nonmonotone_interval": prof.nonmonotone_interval,
        "min_abs_scaled_derivative": float(np.min(np.abs(prof.d_dI))),
    }
    vp = os.path.join(out_dir, "twist_verdict.json")
    _write_json(vp, verdict)
    man = _manifest("twist", config,
                    {"lambda_lo": lam_lo, "lambda_hi": lam_hi,
                     "grid_size": grid_size},
                    [csv_path, vp], started)
    _write_json(os.path.join(out_dir, "manifest_twist.json"), man)
    return man, EXIT_OK


def _rotation_task(args):
    config, sf, lam, theta, iterates = args
    est = rotation_number(config, sf, PoincarePoint(lam, theta), iterates)
    return {"seed_lam": lam, "seed_theta": theta, "value": est.value,
            "error_bound": est.error_bound, "iterates_used": est.iterates_used,
            "method": est.method, "usable": est.usable}


def _curve_task(args):
    config, sf, lam, theta, iterates, modes = args
    try:
        fit = find_invariant_curve(config, sf, PoincarePoint(lam, theta),
                                   modes=modes, N=iterates)
    except (AnalysisError, EscapeError, OriginGuardError,
            StepUnderflowError) as exc:
        return {"seed_lam": lam, "seed_theta": theta, "error": str(exc)}
    doc = fit.to_dict()
    doc.update({"seed_lam": lam, "seed_theta": theta})
    return doc


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_analyze(config, out_dir, sub, seeds, sf, iterates=2000, modes=12,
                period=1, winding=None, horizon=1000, jobs=1):
    started = time.time()
    os.makedirs(out_dir, exist_ok=True)
    params = {"subcommand": sub, "seeds": seeds, "iterates": iterates,
              "modes": modes, "period": period, "winding": winding,
              "horizon": horizon, "jobs": jobs}
    failure = None
    if sub == "rotation":
        recs = _pmap(_rotation_task,
                     [(config, sf, l, t, iterates) for l, t in seeds], jobs)
        findings = [r for r in recs if r.get("usable")]
        header = ["seed_lam", "seed_theta", "value", "error_bound",
                  "iterates_used", "usable"]
        rows = [[_fmt(r["seed_lam"]), _fmt(r["seed_theta"]), _fmt(r["value"]),
                 _fmt(r["error_bound"]), r["iterates_used"],
                 str(r["usable"]).lower()] for r in recs]
    elif sub == "curve":
        recs = _pmap(_curve_task,
                     [(config, sf, l, t, iterates, modes) for l, t in seeds],
                     jobs)
        findings = [r for r in recs if r.get("accepted")]
        header = ["seed_lam", "seed_theta", "rho", "residual", "accepted"]
        rows = [[_fmt(r["seed_lam"]), _fmt(r["seed_theta"]),
                 _fmt(r.get("rho", float("nan"))),
                 _fmt(r.get("residual", float("nan"))),
                 str(bool(r.get("accepted"))).lower()] for r in recs]
    elif sub == "bounded":
        out = boundedness_scan(config, sf,
                               [PoincarePoint(l, t) for l, t in seeds], horizon)
        recs = [r.to_dict() for r in out]
        findings = [r for r in recs if not r["escaped"]]
        header = ["seed_lam", "seed_theta", "completed", "max_amp",
                  "monotone_growth_last_half", "escaped"]
        rows = [[_fmt(r["seed_lam"]), _fmt(r["seed_theta"]), r["completed"],
                 _fmt(r["max_amp"]),
                 str(r["monotone_growth_last_half"]).lower(),
                 str(r["escaped"]).lower()] for r in recs]
    elif sub == "periodic":
        if winding is None:
            raise ConfigError("periodic analysis needs --winding")
        search = find_periodic_orbit(config, sf, period, winding,
                                     [PoincarePoint(l, t) for l, t in seeds])
        recs = [o.to_dict() for o in search.orbits]
        if not search.orbits:
            failure = "no orbit converged; best residual %r" % search.best_residual
        findings = recs
        header = ["lam", "Theta", "m", "p", "residual", "minimal"]
        rows = [[_fmt(r["lam"]), _fmt(r["Theta"]), r["m"], r["p"],
                 _fmt(r["residual"]), str(r["minimal"]).lower()] for r in recs]
    else:
        raise ConfigError("unknown analyze subcommand %r" % sub)

    jp = os.path.join(out_dir, "analyze_%s.json" % sub)
    _write_json(jp, {"config_hash": config_hash(config), "parameters": params,
                     "records": recs})
    cp = os.path.join(out_dir, "analyze_%s.csv" % sub)
    _write_csv(cp, header, rows)
    man = _manifest("analyze " + sub, config, params, [jp, cp], started)
    man["findings"] = len(findings)
    if failure:
        man["failure"] = failure
    _write_json(os.path.join(out_dir, "manifest_analyze_%s.json" % sub), man)
    return man, EXIT_OK if findings else EXIT_NUMERICAL


def cmd_special(n, tol, out_dir):
    started = time.time()
    os.makedirs(out_dir, exist_ok=True)
    sf = compute_special_functions(n, tol)
    sp = os.path.join(out_dir, "special_n%d.csv" % n)
    _write_csv(sp, ["tau", "C", "S"],
               ([_fmt(t), _fmt(c), _fmt(s)]
                for t, c, s in zip(sf.tau, sf.C, sf.S)))
    kp = os.path.join(out_dir, "special_n%d.json" % n)
    _write_json(kp, {"n": n, "period": sf.period, "alpha": sf.alpha,
                     "beta": sf.beta, "c": sf.c, "d": sf.d,
                     "identity_residual": sf.identity_residual(),
                     "symmetry_residual": sf.symmetry_residual()})
    man = _manifest("special", None, {"n": n, "tol": tol}, [sp, kp], started)
    _write_json(os.path.join(out_dir, "manifest_special.json"), man)
    return man, EXIT_OK


# --- argument parsing -------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="impulseduff",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="config JSON path")
        p.add_argument("--out", default="./out", help="output directory")
        p.add_argument("--tol", type=float, default=None,
                       help="override integrator tolerances")

    p = sub.add_parser("simulate", help="integrate trajectories, write CSVs")
    common(p)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--seed-grid", default="lambda=10:1000:log:3,theta=0:1:2")

    p = sub.add_parser("twist", help="twist profile over an action range")
    common(p)
    p.add_argument("--lambda-range", default="1:1000",
                   help="lo:hi (geometric grid)")
    p.add_argument("--grid-size", type=int, default=20)

    p = sub.add_parser("analyze", help="rotation | curve | bounded | periodic")
    p.add_argument("subcommand",
                   choices=["rotation", "curve", "bounded", "periodic"])
    common(p)
    p.add_argument("--seed-grid", default="lambda=10:1000:log:5,theta=0:1:4")
    p.add_argument("--iterates", type=int, default=2000)
    p.add_argument("--modes", type=int, default=12)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--winding", type=int, default=None)
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("special", help="dump C, S, T*, constants for a given n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default="./out")
    p.add_argument("--tol", type=float, default=1e-12)
    return ap


def _load(args):
    config = load_config(args.config)
    if args.tol is not None:
        config = dataclasses.replace(config, abs_tol=args.tol,
                                     rel_tol=args.tol)
    sf = compute_special_functions(config.n)
    return config, sf


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "special":
            _, code = cmd_special(args.n, args.tol, args.out)
            return code
        config, sf = _load(args)
        if args.command == "simulate":
            seeds = parse_seed_grid(args.seed_grid)
            _, code = cmd_simulate(config, args.out, args.t_end, seeds, sf)
        elif args.command == "twist":
            lo, _, hi = args.lambda_range.partition(":")
            _, code = cmd_twist(config, args.out, float(lo), float(hi),
                                args.grid_size, sf)
        elif args.command == "analyze":
            seeds = parse_seed_grid(args.seed_grid)
            _, code = cmd_analyze(config, args.out, args.subcommand, seeds, sf,
                                  iterates=args.iterates, modes=args.modes,
                                  period=args.period, winding=args.winding,
                                  horizon=args.horizon, jobs=args.jobs)
        return code
    except ValueError as exc:  # includes ConfigError
        print("validation error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except (EscapeError, StepUnderflowError, OriginGuardError,
            AnalysisError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print("I/O error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
