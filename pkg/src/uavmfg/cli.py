"""Command line entry points: run, sweep, robustness, plotdata, validate-config.

Exit code 0 on success; on failure the named error class is printed to stderr
and the exit code is nonzero.  The output root resolves from --out, then the
UAVMFG_OUT_ROOT environment variable, then the config's out_dir.
"""

from __future__ import annotations

import argparse
import sys

from .config import (ConfigError, ExperimentConfig, desk_scale_config,
                     load_config, parse_override, validate, with_overrides)
from .harness import (PlotDataError, emit_plot_data, run_experiment,
                      run_robustness, run_sweep)
from .softq import TrainingDiverged


def _add_config_args(p):
    p.add_argument("--config", help="config file (flat key = value text)")
    p.add_argument("--desk", action="store_true",
                   help="start from the minutes-scale desk defaults")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a single config key")
    p.add_argument("--out", help="output root directory")


def _build_config(args):
    if args.config:
        cfg = load_config(args.config)
        if args.desk:
            raise ConfigError("--desk and --config are mutually exclusive")
    elif args.desk:
        cfg = desk_scale_config()
    else:
        cfg = validate(ExperimentConfig())
    if args.overrides:
        changed = {}
        for o in args.overrides:
            if "=" not in o:
                raise ConfigError(f"--set expects KEY=VALUE, got {o!r}")
            key, raw = (tok.strip() for tok in o.split("=", 1))
            changed[key] = parse_override(key, raw)
        cfg = with_overrides(cfg, **changed)
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="uavmfg",
        description="UAV downlink mean-field RL experiments")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="train, evaluate, and persist one run")
    _add_config_args(p_run)

    p_sweep = sub.add_parser("sweep", help="one run per sweep-axis point")
    _add_config_args(p_sweep)

    p_rob = sub.add_parser("robustness", help="agent-removal experiment")
    _add_config_args(p_rob)
    p_rob.add_argument("--remove", type=int, default=2,
                       help="number of UAVs to deactivate")

    p_plot = sub.add_parser("plotdata", help="tidy CSV for a figure family")
    p_plot.add_argument("kind", choices=("algorithms", "policy_vs_q", "ee_vs_q",
                                         "policy_vs_sigma", "ee_vs_sigma",
                                         "observability"))
    p_plot.add_argument("runs", nargs="+", help="run directories")
    p_plot.add_argument("--out", required=True, help="output CSV path")

    p_val = sub.add_parser("validate-config", help="check a config file")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            print(run_experiment(_build_config(args), out_root=args.out))
        elif args.verb == "sweep":
            for d in run_sweep(_build_config(args), out_root=args.out):
                print(d)
        elif args.verb == "robustness":
            result = run_robustness(_build_config(args), args.remove,
                                    out_root=args.out)
            before = result["before"]["mean_reward"]
            after = result["after"]["mean_reward"]
            rel = abs(after - before) / abs(before) if before else float("inf")
            print(f"{result['run_dir']}")
            print(f"mean_reward before={before!r} after={after!r} rel_change={rel:.4f}")
        elif args.verb == "plotdata":
            print(emit_plot_data(args.runs, args.kind, args.out))
        elif args.verb == "validate-config":
            load_config(args.config)
            print("ok")
    except (ConfigError, PlotDataError, TrainingDiverged, ValueError,
            FileNotFoundError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
