"""Command-line entry point.

Exit status: 0 on success, 1 for configuration or validation problems,
2 for numerical failures.  Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import analysis
from .config import load_config, WEIGHT_DEFAULTS
from .errors import (BLGLError, CFLViolation, DegenerateFit, FormatError, GridMismatch,
                     HorizonExceeded, InvalidGrid, NumericalInstability, ParseError,
                     PicardDivergence, QuadratureFailure, SingularOperator,
                     TruncationError, ValidationError, VersionError)
from .snapshot import read_snapshot, write_snapshot
from .solver import evolve
from .weights import WeightParams, triple_norm

SWEEP_COLUMNS = ("nu", "t_form", "width_exponent", "amp_exponent", "kato_layer",
                 "kato_full", "max_norm_ratio", "euler_dist_sup")
NORM_COLUMNS = ("t", "X", "Y", "Z", "triple", "recession")

NUMERICAL = (NumericalInstability, PicardDivergence, SingularOperator, QuadratureFailure)
VALIDATION = (ParseError, ValidationError, InvalidGrid, HorizonExceeded, CFLViolation,
              FormatError, VersionError, TruncationError, GridMismatch)


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, columns, rows) -> None:
    """CSV with a timestamp comment line first; the rest is deterministic."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# generated {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _outdir(cfg, override):
    d = override or cfg.output.dir
    os.makedirs(d, exist_ok=True)
    return d


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def norm_row(rep):
    return (rep.t, rep.X, rep.Y, rep.Z, rep.triple, rep.recession)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args.out)
    traj = evolve(cfg.run)
    rows = [norm_row(r) for r in traj.reports if r is not None]
    path = os.path.join(out, "norms.csv")
    write_csv(path, NORM_COLUMNS, rows)
    if cfg.output.snapshots:
        for k, (t, w) in enumerate(zip(traj.times, traj.omegas)):
            write_snapshot(os.path.join(out, f"snap_{k:05d}.blgl"), w, t)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def sweep_rows(res):
    wexp = res.width_fit[0]
    aexp = res.amp_fit[0]
    for r in res.records:
        yield (r.nu, r.t_form, wexp, aexp, r.kato_layer, r.kato_full, r.max_norm_ratio,
               r.euler_dist_sup)


def sweep_summary(res) -> str:
    lines = [f"nus: {', '.join(fmt(n) for n in res.nus)}"]
    for label, (k, r2) in (("wall amplitude", res.amp_fit), ("layer width", res.width_fit),
                           ("formation time", res.tform_fit)):
        lines.append(f"{label} exponent: {fmt(k)} (r^2 = {fmt(r2)})")
    lines.extend(res.warnings)
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args.out)
    workers = analysis.worker_count(cfg.sweep.workers)
    res = analysis.run_sweep(cfg.run, cfg.sweep.nus, cfg.sweep.c_form, workers)
    for w in res.warnings:
        _warn(w)
    write_csv(os.path.join(out, "sweep.csv"), SWEEP_COLUMNS, sweep_rows(res))
    summary = sweep_summary(res)
    with open(os.path.join(out, "sweep_summary.txt"), "w") as fh:
        fh.write(summary)
    if cfg.output.figures:
        from .plots import sweep_figures
        sweep_figures(res, out)
    sys.stdout.write(summary)
    return 0


def cmd_audit(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args.out)
    a = cfg.audit
    if args.which == "integrals":
        rep = analysis.audit_appendix_integrals(analysis.integral_grid(a.densify))
    elif args.which == "kernels":
        rep = analysis.audit_kernel_lemmas(probes=analysis.make_probes(a.probes, a.seed))
    else:
        rep = analysis.audit_nonlinear_probes(a.probes, a.seed)
    path = os.path.join(out, f"audit_{args.which}.csv")
    write_csv(path, ("estimate", "max_ratio", "refinement_change", "n_points", "n_vacuous"),
              ((k, v, ch, rep.n_points, rep.n_vacuous) for k, v, ch in rep.rows()))
    if cfg.output.figures:
        from .plots import audit_figure
        audit_figure(rep, os.path.join(out, f"audit_{args.which}.png"))
    bad = [k for k, v in rep.max_ratio.items() if not math.isfinite(v)]
    for k, v, _ in rep.rows():
        print(f"{k}: {fmt(v)}")
    if bad:
        _warn(f"non-finite ratios: {', '.join(bad)}")
        return 2
    return 0


def cmd_norms(args) -> int:
    field, t_snap = read_snapshot(args.snapshot)
    if args.config:
        p = load_config(args.config).run.weights
    else:
        p = WeightParams(**{**WEIGHT_DEFAULTS, "nu": args.nu})
    t = t_snap if args.t is None else args.t
    rep = triple_norm(field, t, p, recession=args.recession)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(NORM_COLUMNS)
    w.writerow([fmt(v) for v in norm_row(rep)])
    return 0


def cmd_euler_compare(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(cfg, args.out)
    ns = evolve(cfg.run)
    eu = evolve(replace(cfg.run, backend="euler", monitor_norms=False))
    dist = analysis.euler_distance(ns, eu)
    path = os.path.join(out, "euler_distance.csv")
    write_csv(path, ("t", "l2_distance"), zip(ns.times, dist))
    print(f"sup_t distance: {fmt(float(np.max(dist)))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blgl", description="Boundary-layer growth experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one run, norm CSV and snapshots")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="viscosity sweep and scaling fits")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="numerical audits of the estimates")
    p.add_argument("which", choices=("kernels", "integrals", "nonlinear"))
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("norms", help="norms of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--t", type=float, default=None, help="time (defaults to the snapshot's)")
    p.add_argument("--config")
    p.add_argument("--nu", type=float, default=WEIGHT_DEFAULTS["nu"])
    p.add_argument("--recession", choices=("sqrt", "linear"), default="linear")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("euler-compare", help="distance to the inviscid run")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_euler_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except DegenerateFit as exc:
        _warn(str(exc))
        return 0
    except VALIDATION as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BLGLError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
