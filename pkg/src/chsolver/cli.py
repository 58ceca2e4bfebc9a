"""Command-line entry point.

Subcommands (each takes a config file path):

  simulate   run the configured scenario; stream records to CSV, write
             snapshots at the configured times
  converge   random-mesh refinement study; write a CSV shaped like a
             convergence table
  kernels    dump the verification kernels and their identity residuals
  check      run the configured scenario (or read an existing records CSV
             with --records) and verify the scheme's guarantees

Exit codes: 0 success, 1 usage/validation failure, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigParseError, ConfigValidationError, build_policy, build_scenario, parse_config
from .recordio import RecordWriter, read_records, write_snapshot
from .scenarios import initial_field, run_scenario
from .spectral import Grid
from .stepper import init_state, validate_records
from .policies import AdaptiveStep, run_with_policy
from .timestep import kernel_residuals, random_mesh


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chsolver", description="Periodic Cahn-Hilliard solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "converge", "kernels", "check"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a config file")
        p.add_argument("--scenario", default=None, help="override the scenario name")
        p.add_argument("--outdir", default=None, help="override the output directory")
    sub.choices["check"].add_argument(
        "--records", default=None, help="verify an existing records CSV instead of running"
    )
    return parser


def _outdir(cfg, override) -> Path:
    path = Path(override if override is not None else cfg.outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config, scenario=args.scenario)
    scenario = build_scenario(cfg)
    out = _outdir(cfg, args.outdir)
    records, snapshots = run_scenario(scenario)
    with RecordWriter(out / "records.csv") as w:
        for rec in records:
            if rec.n % cfg.record_every == 0 or rec is records[-1]:
                w.write(rec)
    for i, (t, field) in enumerate(snapshots):
        write_snapshot(field, out / f"snap_{i:03d}.bin", t)
    print(f"{scenario.name}: {len(records)} steps to t = {records[-1].t:g}, "
          f"gamma {records[0].gamma:.6g} -> {records[-1].gamma:.6g}")
    print(f"wrote {out / 'records.csv'} and {len(snapshots)} snapshots")
    return 0


def _cmd_converge(args) -> int:
    from .scenarios import run_convergence

    cfg = parse_config(args.config, scenario=args.scenario or "convergence")
    out = _outdir(cfg, args.outdir)
    rows = run_convergence(
        base_steps=cfg.base_k,
        levels=cfg.levels,
        horizon=cfg.horizon,
        eps=cfg.eps,
        seed=cfg.seed,
        modes=cfg.modes,
        dim=cfg.dim,
        length=cfg.length,
        ref_steps=cfg.ref_steps,
        dealias=cfg.dealias,
    )
    path = out / "convergence.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("K,tau,h1_error,h1_order,gamma_error,gamma_order,max_ratio\n")
        for r in rows:
            fh.write(
                f"{r.steps},{r.tau:.17g},{r.h1_error:.17g},{r.h1_order:.17g},"
                f"{r.gamma_error:.17g},{r.gamma_order:.17g},{r.max_ratio:.17g}\n"
            )
    for r in rows:
        print(
            f"K={r.steps:6d}  tau={r.tau:.4e}  h1={r.h1_error:.4e} ({r.h1_order:5.2f})  "
            f"gamma={r.gamma_error:.4e} ({r.gamma_order:5.2f})  max_ratio={r.max_ratio:.3f}"
        )
    print(f"wrote {path}")
    return 0


def _cmd_kernels(args) -> int:
    cfg = parse_config(args.config, scenario=args.scenario or "convergence")
    out = _outdir(cfg, args.outdir)
    mesh = random_mesh(cfg.horizon, cfg.max_n, cfg.seed)
    from .timestep import dcc_kernels, doc_kernels

    with open(out / "kernels.csv", "w", encoding="utf-8") as fh:
        fh.write("n,offset,theta,p\n")
        for n in range(1, cfg.max_n + 1):
            theta = doc_kernels(mesh, n)
            p = dcc_kernels(mesh, n)
            for m in range(n):
                fh.write(f"{n},{m},{theta[m]:.17g},{p[m]:.17g}\n")
    worst = 0.0
    with open(out / "kernel_residuals.csv", "w", encoding="utf-8") as fh:
        fh.write("n,doc_orthogonality,dcc_identity,dcc_sum,dcc_bound_margin,telescoping\n")
        for n in range(1, cfg.max_n + 1):
            res = kernel_residuals(mesh, n)
            fh.write(
                f"{n},{res.doc_orthogonality:.17g},{res.dcc_identity:.17g},"
                f"{res.dcc_sum:.17g},{res.dcc_bound_margin:.17g},{res.telescoping:.17g}\n"
            )
            worst = max(worst, res.doc_orthogonality, res.dcc_identity, res.dcc_sum, res.telescoping)
    print(f"wrote {out / 'kernels.csv'} and {out / 'kernel_residuals.csv'}")
    print(f"worst identity residual over n <= {cfg.max_n}: {worst:.3e}")
    return 0


def _cmd_check(args) -> int:
    cfg = parse_config(args.config, scenario=args.scenario)
    if args.records is not None:
        records = read_records(args.records)
        cap = None
        if cfg.policy_kind == "adaptive":
            cap = build_policy(cfg).ratio_cap
        problems = validate_records(records, ratio_cap=cap)
    else:
        scenario = build_scenario(cfg)
        grid = Grid(scenario.dim, scenario.length, scenario.modes)
        phi0 = initial_field(scenario, grid)
        state = init_state(phi0, scenario.eps, dealias=scenario.dealias)
        gamma0 = state.gamma
        mass0 = phi0.integral()
        policy = scenario.policy
        state, records = run_with_policy(state, policy, scenario.horizon)
        cap = policy.ratio_cap if isinstance(policy, AdaptiveStep) else None
        problems = validate_records(
            records, gamma0=gamma0, mass0=mass0, volume=grid.volume, ratio_cap=cap
        )
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        print(f"check failed: {len(problems)} violation(s) over {len(records)} steps", file=sys.stderr)
        return 1
    print(f"check passed: {len(records)} steps, all guarantees hold")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
    "kernels": _cmd_kernels,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigParseError, ConfigValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
