"""Command line entry point.

Exit codes: 0 success, 1 run failure (non-convergence, failed verification,
invalid threshold bracket), 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import averaging, config, diagnostics, records, solver
from .config import ConfigError

log = logging.getLogger("dmsoliton")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmsoliton", description="Ground states of the averaged dispersion-managed NLS.")
    ap.add_argument("mode_pos", nargs="?", choices=config.MODES, metavar="mode",
                    help="one of: " + ", ".join(config.MODES))
    ap.add_argument("--mode", choices=config.MODES)
    ap.add_argument("--config", help="flat key = value file")
    ap.add_argument("--lambda", dest="lam", help="mass, or inclusive range start:stop:step")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _problem_summary(rc: config.RunConfig) -> dict:
    keys = [k for k in sorted(rc.values) if not k.startswith(("threshold.", "scan."))]
    return {k: rc.values[k] for k in keys}


def _solve(rc: config.RunConfig, out: str) -> int:
    prob, cfg = rc.problem(), rc.solver()
    res = solver.solve(prob, cfg)
    records.atomic_write(os.path.join(out, "soliton.csv"), records.field_csv_text(res.field))
    records.atomic_write(os.path.join(out, "trace.csv"), records.trace_csv_text(res))
    records.write_result(res, os.path.join(out, "result.json"), _problem_summary(rc))
    log.info("E = %.12g, omega = %.12g, residual = %.3e, converged = %s", res.energy, res.multiplier,
             res.residual, res.converged)
    return 0 if res.converged else 1


def _scan(rc: config.RunConfig, out: str) -> int:
    table = solver.energy_scan(rc.problem(), rc.lambdas, rc.solver())
    records.atomic_write(os.path.join(out, "energy_table.csv"), records.scan_csv_text(table))
    if not table.monotone:
        log.warning("energy is not non-increasing between %s", table.violations)
    ok = all(r.converged or r.collapsed for r in table.rows)
    return 0 if ok and table.monotone else 1


def _threshold(rc: config.RunConfig, out: str) -> int:
    lo, hi = rc.get("threshold.lo", float), rc.get("threshold.hi", float)
    tol = rc.get("threshold.tol", float)
    try:
        lam_cr = solver.threshold_estimate(rc.problem(), (lo, hi), tol, rc.solver())
    except ValueError as exc:
        log.error("%s", exc)
        return 1
    text = json.dumps({"format_version": records.FORMAT_VERSION, "lambda_cr": lam_cr, "bracket": [lo, hi],
                       "tol": tol}, sort_keys=True, indent=1) + "\n"
    records.atomic_write(os.path.join(out, "threshold.json"), text)
    log.info("lambda_cr ~ %.6g (+- %.3g)", lam_cr, tol)
    return 0


def _verify(rc: config.RunConfig, out: str) -> int:
    rep = diagnostics.run_all(rc.problem(), rc.solver())
    records.atomic_write(os.path.join(out, "report.txt"), rep.text())
    records.atomic_write(os.path.join(out, "report.csv"), rep.csv_text())
    for r in rep.failures:
        log.error("%s", r.line())
    return rep.exit_code


def _density(rc: config.RunConfig, out: str) -> int:
    m = rc.measure()
    b = m.breakpoints
    rows = [(b[i], b[i + 1], m.values[i]) for i in range(m.values.size)]
    records.atomic_write(os.path.join(out, "density.csv"), records.csv_text(["r_left", "r_right", "psi"], rows))
    r, w = averaging.quadrature(m, rc.get("quadrature.nodes", int))
    records.atomic_write(os.path.join(out, "quadrature.csv"), records.csv_text(["r", "weight"], zip(r, w)))
    return 0


DISPATCH = {"solve": _solve, "scan": _scan, "threshold": _threshold, "verify": _verify, "density": _density}


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.mode_pos and args.mode and args.mode_pos != args.mode:
        log.error("conflicting modes %r and %r", args.mode_pos, args.mode)
        return 2
    try:
        text = None
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        rc = config.load(text, args.override, args.mode or args.mode_pos, args.lam, args.seed,
                         source=args.config or "<config>")
        rc.validate()
    except (ConfigError, OSError) as exc:
        log.error("config error: %s", exc)
        return 2
    try:
        return DISPATCH[rc.mode](rc, args.out)
    except (solver.DegenerateGradient, ValueError) as exc:
        log.error("run failed: %s", exc)
        return 1


def main():
    sys.exit(run())
