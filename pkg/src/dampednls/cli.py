"""Command line entry point.

Exit codes: 0 success, 1 tolerance breach, 2 precondition error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import diagnostics as diag
from .cutoff import RadialCutoff, margin_table, verify_positivity
from .experiments import (
    NonMonotoneError, PreconditionError, RunConfig, _jsonable, emit_report, initial_verdicts,
    run_scenario, scattering_probe, threshold_bisection,
)
from .snapshots import read_snapshot

OK, BREACH, PRECONDITION = 0, 1, 2


def _print_json(obj):
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    summary, ok = run_scenario(cfg)
    _print_json(summary)
    return OK if ok else BREACH


def cmd_diagnose(args) -> int:
    paths = sorted(Path(args.snapshots).glob("*.snap"))
    if not paths:
        raise PreconditionError(f"no .snap files in {args.snapshots}")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["file"] + diag.DiagnosticSample.columns())
    for p in paths:
        u, spec = read_snapshot(p)
        if u.grid.d != spec.N:
            raise PreconditionError(f"{p}: grid dimension {u.grid.d} differs from N={spec.N}")
        s = diag.sample(u, spec, RadialCutoff(args.R) if args.R else None)
        writer.writerow([p.name] + [repr(float(x)) for x in s.row()])
    return OK


def cmd_criteria(args) -> int:
    cfg = RunConfig.load(args.config)
    verdicts = [v.to_dict() for v in initial_verdicts(cfg) if v.applicable]
    _print_json({"config": cfg.config_hash(), "verdicts": verdicts})
    return OK


def cmd_threshold(args) -> int:
    cfg = RunConfig.load(args.config)
    try:
        res = threshold_bisection(cfg, args.a_lo, args.a_hi, args.width)
    except NonMonotoneError as exc:
        _print_json({"error": str(exc), "blowup_run": exc.blowup_run, "global_run": exc.global_run})
        return BREACH
    emit_report(cfg, extra={"threshold": res.to_dict()})
    _print_json(res.to_dict())
    return OK


def cmd_scatter(args) -> int:
    cfg = RunConfig.load(args.config)
    rep = scattering_probe(cfg, args.t1, args.t2)
    emit_report(cfg, extra={"scatter": rep.to_dict()})
    _print_json(rep.to_dict())
    return OK


def cmd_verify_cutoff(args) -> int:
    cut = RadialCutoff(1.0, completion=args.completion)
    report = verify_positivity(cut, args.n, args.eps, C=args.c)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["r", "chi1", "chi2", "margin"])
    for row in margin_table(cut, args.n, args.eps, args.c):
        writer.writerow([repr(float(x)) for x in row])
    print(f"# min margin {report.min_margin:.6e} at r={report.argmin:.6g}; "
          f"largest admissible eps {report.largest_eps:.6g}", file=sys.stderr)
    return OK if report.ok else BREACH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dampednls", description="Damped NLS simulator and diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the scenario named in a config file")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("diagnose", help="diagnostics CSV for a directory of snapshots")
    s.add_argument("--snapshots", required=True)
    s.add_argument("--R", type=float, default=None, help="cutoff radius for J, W")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("criteria", help="blow-up verdicts for the initial datum")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_criteria)

    s = sub.add_parser("threshold", help="bisect the damping threshold")
    s.add_argument("--config", required=True)
    s.add_argument("--a-lo", type=float, required=True)
    s.add_argument("--a-hi", type=float, required=True)
    s.add_argument("--width", type=float, required=True)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("scatter", help="scattering probe on [t1, t2]")
    s.add_argument("--config", required=True)
    s.add_argument("--t1", type=float, required=True)
    s.add_argument("--t2", type=float, required=True)
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("verify-cutoff", help="positivity table of the localisation weights")
    s.add_argument("--n", type=int, required=True, help="dimension N")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--completion", choices=["cubic", "quintic"], default="cubic")
    s.set_defaults(func=cmd_verify_cutoff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (PreconditionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
