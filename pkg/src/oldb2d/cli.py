"""Command-line entry points: run, picard, check, bounds.

Exit codes: 0 success, 1 monitor violation (or fixed-point divergence),
2 configuration error, 3 numerical failure (NaN or overflow).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics, picard, snapshots
from .checks import run_checks
from .config import ConfigError, build_initial, load_config
from .integrate import MonitorViolation, StepControl, run
from .spectral import make_grid

EXIT_OK = 0
EXIT_MONITOR = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oldb2d",
        description="Pseudo-spectral 2D diffusive Oldroyd-B solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate the configured problem to t_end")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=".")

    p_pic = sub.add_parser("picard", help="solve the mild formulation by iteration")
    p_pic.add_argument("--config", required=True)
    p_pic.add_argument("--t0", required=True, type=float)
    p_pic.add_argument("--nodes", type=int, default=65)
    p_pic.add_argument("--max-iter", type=int, default=30)
    p_pic.add_argument("--tol", type=float, default=1e-10)
    p_pic.add_argument("--compare", action="store_true",
                       help="also run the time stepper and report field gaps")

    p_chk = sub.add_parser("check", help="run the invariant/property suite")
    p_chk.add_argument("--config", required=True)

    p_bnd = sub.add_parser("bounds", help="print the a priori bound ledger")
    p_bnd.add_argument("--config", required=True)
    p_bnd.add_argument("--traj", default=None,
                       help="time-series CSV from a previous run to check against")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    grid = make_grid(cfg.n, cfg.length)
    initial = build_initial(cfg, grid)
    os.makedirs(args.out_dir, exist_ok=True)
    series_path = os.path.join(args.out_dir, "timeseries.csv")
    if os.path.exists(series_path):
        os.remove(series_path)

    traj = run(initial, cfg.params, cfg.control, cfg.monitors)
    for record in traj.records:
        snapshots.append_timeseries(record, series_path)
    for t_snap, state in traj.snapshots:
        snapshots.write_snapshot(
            state, os.path.join(args.out_dir, f"snapshot_t{t_snap:.6g}.snap")
        )
    snapshots.write_snapshot(traj.final_state, os.path.join(args.out_dir, "final_state.snap"))

    ledger = diagnostics.apriori_ledger(initial, cfg.params, cfg.control.t_end,
                                        cfg.constant_c)
    report = diagnostics.bound_check(traj, ledger, cfg.params)
    last = traj.records[-1]
    print(f"run complete: t={last.time:.6g}, energy={last.energy:.9g}, "
          f"min gamma={last.min_gamma:.3e}")
    row = report.rows[0]
    print(f"energy budget gate: observed {row.observed:.9g} <= R0 {row.bound:.9g} "
          f"-> {'PASS' if row.passed else 'FAIL'}")
    print(f"wrote {series_path}")
    return EXIT_OK if row.passed else EXIT_MONITOR


def _cmd_picard(args) -> int:
    cfg = load_config(args.config)
    grid = make_grid(cfg.n, cfg.length)
    initial = build_initial(cfg, grid)
    pcfg = picard.PicardConfig(t0=args.t0, n_time_nodes=args.nodes,
                               max_iter=args.max_iter, tol=args.tol)
    traj, hist = picard.picard_iterate(initial.u, initial.stress, initial.rho,
                                       cfg.params, pcfg)
    print(f"converged in {len(hist.diffs)} iterations")
    print("iter  |u|_X            |sigma|_Y        |rho|_Z          diff")
    for i in range(len(hist.u_norms)):
        diff = f"{hist.diffs[i - 1]:.3e}" if 1 <= i <= len(hist.diffs) else "-"
        print(f"{i:>4}  {hist.u_norms[i]:<15.9g}  {hist.sigma_norms[i]:<15.9g}  "
              f"{hist.rho_norms[i]:<15.9g}  {diff}")
    if len(hist.diffs) >= 3:
        print(f"contraction estimate: {picard.contraction_estimate(hist):.4f}")

    if args.compare:
        ctl = StepControl(
            cfl=cfg.control.cfl,
            dt_min=min(cfg.control.dt_min, 1e-12),
            dt_max=min(cfg.control.dt_max, args.t0 / 50.0),
            t_end=args.t0,
            output_every=10 ** 9,
        )
        stepped = run(initial, cfg.params, ctl, cfg.monitors).final_state
        mild = traj.state(pcfg.n_time_nodes - 1)
        pairs = (
            ("u", mild.u.values, stepped.u.values),
            ("a", mild.stress.a.values, stepped.stress.a.values),
            ("b", mild.stress.b.values, stepped.stress.b.values),
            ("c", mild.stress.c.values, stepped.stress.c.values),
            ("rho", mild.rho.values, stepped.rho.values),
        )
        print("agreement with the time stepper at t0 (relative L2):")
        for name, fa, fb in pairs:
            num = np.sqrt(np.mean((fa - fb) ** 2))
            den = max(np.sqrt(np.mean(fb ** 2)), 1e-300)
            print(f"  {name:>3}: {num / den:.3e}")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    results = run_checks(cfg)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.detail}")
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_MONITOR


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    grid = make_grid(cfg.n, cfg.length)
    initial = build_initial(cfg, grid)
    ledger = diagnostics.apriori_ledger(initial, cfg.params, cfg.control.t_end,
                                        cfg.constant_c)
    print(f"a priori bound ledger (T={ledger.horizon:g}, C={ledger.constant_c:g}):")
    for name, entry in ledger.entries().items():
        flag = "  [overflowed]" if entry.overflowed else ""
        print(f"  {name:<3} = {entry.value:<22.12g} [{entry.units}]{flag}")

    if args.traj:
        series = snapshots.read_timeseries(args.traj)
        times = series["time"]
        if len(times) < 2:
            raise ConfigError("time series too short for a bound check")
        # Only the columns persisted in the CSV are available here, which
        # covers the hard R0 gate and the R1 sup/integral pair.
        acc = 0.0
        obs0 = series["u_L2"][0] ** 2 + cfg.params.bigK * series["sigma_L1"][0]
        obs1 = series["sigma_L2"][0] ** 2
        acc1 = 0.0
        for i in range(1, len(times)):
            dt = times[i] - times[i - 1]
            acc += 0.5 * dt * (series["grad_u_L2"][i] ** 2 + series["grad_u_L2"][i - 1] ** 2)
            acc1 += 0.5 * dt * (series["grad_sigma_L2"][i] ** 2
                                + series["grad_sigma_L2"][i - 1] ** 2)
            obs0 = max(obs0, series["u_L2"][i] ** 2
                       + cfg.params.bigK * series["sigma_L1"][i]
                       + 2.0 * cfg.params.nu * acc)
            obs1 = max(obs1, series["sigma_L2"][i] ** 2 + cfg.params.kappa * acc1)
        ok = obs0 <= ledger.R0.value * (1 + 1e-6)
        print(f"R0 gate: observed {obs0:.9g} <= {ledger.R0.value:.9g} "
              f"-> {'PASS' if ok else 'FAIL'}")
        ratio = obs1 / ledger.R1.value if ledger.R1.value > 0 else float("inf")
        print(f"R1 ratio (informational): {ratio:.3e}")
        if not ok:
            return EXIT_MONITOR
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    handlers = {
        "run": _cmd_run,
        "picard": _cmd_picard,
        "check": _cmd_check,
        "bounds": _cmd_bounds,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except snapshots.SnapshotFormatError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MonitorViolation as exc:
        print(f"monitor violation: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if exc.kind in ("nan", "overflow") else EXIT_MONITOR
    except picard.PicardDivergenceError as exc:
        print(f"fixed-point divergence: {exc}", file=sys.stderr)
        return EXIT_MONITOR


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
