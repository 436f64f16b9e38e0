"""Command-line front end: run / sweep / predict / check.

Flags mirror the config keys; a flag beats the config file, which beats the
built-in defaults.  The PARAKIN_WORKERS environment variable overrides the
worker-pool size everywhere.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .config import parse_config
from .errors import ConfigError, SimulationError
from .experiment import EXIT_CONFIG, EXIT_ERROR, run_experiment, run_sweep
from .parareal import PerfModel, predict_cost

#: CLI flag -> dotted config key
_FLAG_KEYS = {
    "nx": "mesh.nx",
    "nvx": "mesh.nvx",
    "nvy": "mesh.nvy",
    "nvz": "mesh.nvz",
    "x_star": "mesh.x_star",
    "v_star": "mesh.v_star",
    "eps": "time.eps",
    "t_final": "time.t_final",
    "parareal": "parareal.enabled",
    "windows": "parareal.windows",
    "k_max": "parareal.k_max",
    "tol": "parareal.tol",
    "workers": "parareal.workers",
    "adaptation": "adaptation.enabled",
    "delta0": "adaptation.delta0",
    "eta0": "adaptation.eta0",
    "combine": "adaptation.combine",
    "scale_remainder": "adaptation.scale_remainder",
    "reinit": "adaptation.reinit",
    "lift_order": "lifting.order",
    "time_elim": "lifting.time_elim",
    "out": "output.directory",
    "snapshots": "output.snapshots",
    "snapshot_times": "output.snapshot_times",
    "trace": "output.trace",
    "mode": "run.mode",
    "seed": "run.seed",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (INI sections: mesh, time, parareal, ...)")
    for flag in _FLAG_KEYS:
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None, metavar="V")


def _collect_overrides(args: argparse.Namespace) -> dict:
    return {
        _FLAG_KEYS[flag]: getattr(args, flag)
        for flag in _FLAG_KEYS
        if getattr(args, flag, None) is not None
    }


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="parakin",
        description="Hybrid kinetic/fluid Vlasov-Poisson-BGK solver with parareal time parallelism",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    _add_config_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="eps grid x toggle matrix, one subdirectory per cell")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--eps-grid", required=True,
                         help="comma-separated Knudsen numbers, e.g. 0.5,1e-2,1e-4")

    p_pred = sub.add_parser("predict", help="cost model from a timings.csv")
    p_pred.add_argument("--in", dest="timings", required=True, help="timings.csv of an instrumented run")
    p_pred.add_argument("--np", dest="n_workers", type=int, default=None, help="worker count to model")
    p_pred.add_argument("--k", dest="k", type=int, default=None, help="iteration count to model")

    p_check = sub.add_parser("check", help="run the built-in invariant suite")
    p_check.add_argument("--fast", action="store_true", help="skip the slower stepping checks")
    return ap


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, _collect_overrides(args))
    res = run_experiment(cfg)
    print(f"status: {res.status} (iterations={res.iterations}) -> {res.out_dir}")
    return res.exit_code


def _cmd_sweep(args) -> int:
    overrides = _collect_overrides(args)
    out_root = overrides.pop("output.directory", "sweep")
    cfg = parse_config(args.config, overrides)
    eps_values = [float(tok) for tok in args.eps_grid.replace(",", " ").split()]
    root = run_sweep(cfg, eps_values, out_root)
    print(f"sweep complete -> {root}")
    return 0


def _cmd_predict(args) -> int:
    values = {}
    with open(args.timings, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != ["key", "value"]:
            raise ConfigError(f"{args.timings}: expected key,value rows")
        for key, value in rd:
            values[key] = value
    try:
        pm = PerfModel(
            t_hmm=float(values["fine_window_max_s"]),
            t_fluid=float(values["fluid_window_max_s"]),
            t_lift=float(values["lift_window_max_s"]),
            n_workers=args.n_workers or int(values["workers"]),
            ng=int(values["windows"]),
            k=args.k or max(1, int(values["iterations"])),
        )
    except KeyError as exc:
        raise ConfigError(f"{args.timings}: missing key {exc}") from None
    t_pred, k_opt, beats = predict_cost(pm)
    baseline = pm.ng * pm.t_hmm
    print(f"predicted_t_parareal_s: {t_pred:.6g}")
    print(f"serial_fine_baseline_s: {baseline:.6g}")
    print(f"k_opt_bound: {k_opt}")
    print(f"break_even: {'yes' if beats else 'no'}")
    return 0


def _cmd_check(args) -> int:
    from .checks import run_checks

    ok = run_checks(fast=args.fast)
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "predict":
            return _cmd_predict(args)
        if args.command == "check":
            return _cmd_check(args)
        raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
