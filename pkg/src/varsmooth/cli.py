"""Command-line entry point for the benchmark harness.

Subcommands: generate, solve, convergence, ber-sweep, grid-select, plot.
Exit codes: 0 on success, 2 for configuration problems (including malformed
input CSVs for plotting), 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .experiments import (
    ConfigError,
    generate_to_file,
    grid_select,
    load_config,
    parse_config_text,
    run_ber_sweep,
    run_convergence,
    run_single_solve,
)
from .solver import DivergenceError, StepsizeError
from .svgplot import PlotDataError, PlotSpec, emit_plot

SUBCOMMANDS = ("generate", "solve", "convergence", "ber-sweep", "grid-select", "plot")

_EXPERIMENT_OF = {
    "generate": "single_solve",
    "solve": "single_solve",
    "convergence": "convergence",
    "ber-sweep": "ber_sweep",
    "grid-select": "ber_sweep",
}


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varsmooth",
        description="Variable-smoothing detection benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed base override")
        p.add_argument("--trials", type=int, default=None, help="trial count override")
        p.add_argument("--threads", type=int, default=None, help="worker pool size")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="config override, repeatable",
        )
    return parser


def _plot_kind_spec(kind: str) -> PlotSpec:
    if kind == "ber":
        return PlotSpec(
            mode="grouped_mean",
            x_column="snr_db",
            y_column="ber",
            group_column="method",
            x_label="SNR (dB)",
            y_label="mean BER",
            y_log=True,
            floor_at_eps=True,
        )
    if kind == "convergence":
        return PlotSpec(
            mode="wide",
            x_column="t_s",
            x_label="time (s)",
            y_label="mean cost",
            y_log=True,
        )
    raise ConfigError(f"unknown plot kind {kind!r} (expected 'ber' or 'convergence')")


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        if args.command == "plot":
            raw = parse_config_text(args.config, args.override)
            if not raw.has_option("plot", "csv"):
                raise ConfigError("plot needs plot.csv (via config or --override)")
            csv_path = raw.get("plot", "csv")
            kind = raw.get("plot", "kind", fallback="convergence")
            out_name = raw.get("plot", "out", fallback="plot.svg")
            out_dir = args.out or "."
            from pathlib import Path

            Path(out_dir).mkdir(parents=True, exist_ok=True)
            out_path = Path(out_dir) / out_name
            emit_plot(csv_path, _plot_kind_spec(kind), out_path)
            print(out_path)
            return 0

        cfg = load_config(
            args.config, args.override, experiment=_EXPERIMENT_OF[args.command]
        )
        if args.seed is not None:
            cfg = replace(cfg, seed_base=args.seed)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
        if args.threads is not None:
            cfg = replace(cfg, parallel_trials=args.threads)
        if args.out is not None:
            cfg = replace(cfg, output_dir=args.out)
        cfg.validate()

        if args.command == "generate":
            print(generate_to_file(cfg))
        elif args.command == "solve":
            paths = run_single_solve(cfg)
            print(paths["summary"])
        elif args.command == "convergence":
            paths = run_convergence(cfg)
            print(paths["aggregate"])
            print(paths["svg"])
        elif args.command == "ber-sweep":
            paths = run_ber_sweep(cfg)
            print(paths["csv"])
            print(paths["svg"])
        elif args.command == "grid-select":
            best = grid_select(cfg)
            for method, params in best.items():
                shown = {k: v for k, v in params.items() if k != "mean_ber"}
                print(f"{method}: {shown} (mean BER {params['mean_ber']:.3e})")
        return 0
    except (ConfigError, PlotDataError, FileNotFoundError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (StepsizeError, DivergenceError, np.linalg.LinAlgError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
