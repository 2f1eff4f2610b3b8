"""Command line front end: ``delayvar {solve,verify,identity,converge}``.

Exit codes
----------
solve     0 converged, 2 not converged, 1 configuration error
verify    0 residual within threshold, 3 above it, 1 bad input
identity  0 every suite within tolerance, 3 otherwise, 1 configuration error
converge  0 residual decreases across levels, 3 otherwise, 1 configuration error
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .criterion import LagrangianAlong
from .euler_lagrange import el_data, fubini_identity_check, weak_stationarity, write_el_report_csv
from .identities import run_all
from .report import write_plot_svg, write_rows_csv
from .solver import convergence_study, minimize
from .trajectory import Perturbation, read_trajectory_csv, write_trajectory_csv

__all__ = ["main", "build_parser"]

log = logging.getLogger("delayvar")

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    name = os.environ.get("DELAYVAR_LOG", "info").strip().lower()
    level = LOG_LEVELS.get(name)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("delayvar")
    root.handlers[:] = [handler]
    root.propagate = False
    root.setLevel(level if level is not None else logging.INFO)
    if level is None:
        log.warning("DELAYVAR_LOG=%r not recognised; using info (choose quiet, info, debug)", name)


def build_parser():
    p = argparse.ArgumentParser(prog="delayvar", description="Delay variational problems: solve and verify.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run configuration (key = value lines)")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="seed (overrides solver.seed and identity.seed)")
        sp.add_argument("--threshold", type=float, help="residual threshold (overrides verify.threshold)")

    common(sub.add_parser("solve", help="minimize and write trajectory, report, summary and plot"))
    v = sub.add_parser("verify", help="check the Euler-Lagrange residual of a stored trajectory")
    common(v)
    v.add_argument("trajectory", nargs="?", help="trajectory CSV (default: <out>/trajectory.csv)")
    common(sub.add_parser("identity", help="run the randomized measure identity suites"))
    common(sub.add_parser("converge", help="solve on several grid levels"))
    return p


def _load(args):
    run = load_config(args.config)
    if args.out:
        run.out_dir = Path(args.out)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        run.solver = replace(run.solver, seed=args.seed)
        run.identity = dict(run.identity, seed=args.seed)
    if args.threshold is not None:
        run.threshold = args.threshold
    run.out_dir.mkdir(parents=True, exist_ok=True)
    return run


def _probe(x):
    """Fixed smooth perturbation used for the exchange-of-integration check."""
    t = x.nodes
    w = np.pi / x.T
    vals = np.repeat(np.sin(w * t)[:, None], x.n, axis=1)
    ders = np.repeat((w * np.cos(w * t))[:, None], x.n, axis=1)
    vals[0] = 0.0
    vals[-1] = 0.0
    return Perturbation(x.r, x.T, vals, ders)


def _diagnose(prob, x, q):
    along = LagrangianAlong(prob, x)
    rep = el_data(prob, x, q=q, along=along)
    ws = weak_stationarity(prob, x, q=q, along=along)
    return rep, ws, along


def cmd_solve(args):
    run = _load(args)
    prob, psi = run.build_problem(), run.build_history()
    res = minimize(prob, psi, run.zeta, run.solver)
    x = res.trajectory
    q = run.solver.quadrature
    rep, ws, _ = _diagnose(prob, x, q)
    out = run.out_dir
    write_trajectory_csv(x, out / "trajectory.csv")
    write_el_report_csv(rep, out / "el_report.csv")
    write_rows_csv(
        out / "summary.csv",
        ["problem", "n", "r", "T", "N", "J", "grad_norm", "iterations", "converged", "residual_osc",
         "weak_stationarity", "message"],
        [[prob.name, prob.n, prob.r, prob.T, x.N, res.J, res.grad_norm, res.iterations, res.converged,
          rep.residual_osc, ws, res.message]],
    )
    m = x.m
    t_all = np.concatenate([-prob.r + (x.T / x.N) * np.arange(m), x.nodes])
    write_plot_svg(out / "plot.svg", t_all, x(t_all), rep.times, rep.residual)
    log.info(
        "J=%.12g grad=%.3e iterations=%d residual_osc=%.3e -> %s",
        res.J, res.grad_norm, res.iterations, rep.residual_osc, out,
    )
    if not res.converged:
        log.warning("not converged: %s", res.message)
        return 2
    return 0


def cmd_verify(args):
    run = _load(args)
    prob, psi = run.build_problem(), run.build_history()
    path = Path(args.trajectory) if args.trajectory else run.out_dir / "trajectory.csv"
    try:
        x = read_trajectory_csv(path, psi, prob.T)
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory: {exc.strerror}", None, str(path)) from None
    except ValueError as exc:
        raise ConfigError(str(exc), None, str(path)) from None
    if abs(x.values[-1] - run.zeta).max() > 1e-9 * (1.0 + abs(run.zeta).max()):
        log.warning("trajectory endpoint %s differs from configured zeta %s", x.values[-1], run.zeta)
    q = run.solver.quadrature
    rep, ws, along = _diagnose(prob, x, q)
    lhs, rhs = fubini_identity_check(prob, x, _probe(x), q, along)
    write_el_report_csv(rep, run.out_dir / "el_report.csv")
    ok = rep.residual_osc <= run.threshold
    print(
        f"residual_osc={rep.residual_osc:.6e} threshold={run.threshold:.3e} "
        f"weak_stationarity={ws:.6e} exchange_gap={abs(lhs - rhs):.3e} -> {'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 3


def cmd_identity(args):
    run = _load(args)
    ident = run.identity
    results = run_all(
        ident.get("seed", 0),
        fubini_cases=ident.get("fubini_cases", 100),
        pairing_cases=ident.get("pairing_cases", 1000),
        ibp_cases=ident.get("ibp_cases", 200),
    )
    write_rows_csv(
        run.out_dir / "identity_report.csv",
        ["suite", "cases", "max_discrepancy", "tolerance", "violations", "passed"],
        [[r.name, r.cases, r.max_discrepancy, r.tolerance, r.violations, r.passed] for r in results],
    )
    for r in results:
        print(f"{r.name:14s} cases={r.cases:5d} max={r.max_discrepancy:.3e} violations={r.violations}")
    return 0 if all(r.passed for r in results) else 3


def cmd_converge(args):
    run = _load(args)
    prob, psi = run.build_problem(), run.build_history()
    rows, monotone = convergence_study(prob, psi, run.zeta, run.solver, run.levels)
    write_rows_csv(
        run.out_dir / "levels.csv",
        ["N", "J", "grad_norm", "residual_osc", "weak_stationarity", "iterations", "converged"],
        [[r.N, r.J, r.grad_norm, r.residual_osc, r.weak_stationarity, r.iterations, r.converged] for r in rows],
    )
    for r in rows:
        print(f"N={r.N:5d} J={r.J:.12g} residual_osc={r.residual_osc:.3e} converged={r.converged}")
    return 0 if monotone else 3


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "identity": cmd_identity, "converge": cmd_converge}


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
