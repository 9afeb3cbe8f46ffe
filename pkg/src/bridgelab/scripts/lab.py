#!/usr/bin/env python
"""Run one bridgelab experiment and write its table."""

import argparse
import logging
import sys
from pathlib import Path

from bridgelab.config import EXPERIMENTS, OUTPUT_FORMATS, build_config
from bridgelab.exceptions import BridgeLabError, InvariantFailure, NonConvergence
from bridgelab.experiments import run_experiment
from bridgelab.io import read_config_file, write_record

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVELS = ["debug", "info", "warning", "error"]


def main(
    experiment,
    config_path=None,
    output_file=None,
    fmt=None,
    seed=None,
    silent=False,
    max_workers=None,
):
    """Run an experiment and save its record.

    Args:
        experiment: Experiment name, one of EXPERIMENTS.
        config_path: Optional key=value config file.
        output_file: Output path; overrides output.path from the config.
        fmt: "csv" or "json"; overrides output.format from the config.
        seed: Seed for randomized states; overrides the config.
        silent: Suppress progress bars and the failure listing.
        max_workers: Maximum number of worker processes for check and nlgt-sweep.

    Returns:
        Path of the written record.

    Raises:
        ConfigError: invalid config file or overrides.
        InvariantFailure: the record was written but some tolerance checks failed.
    """
    values = read_config_file(config_path) if config_path is not None else {}
    if fmt is not None:
        values["output.format"] = fmt
    if seed is not None:
        values["seed"] = seed
    if output_file is not None:
        values["output.path"] = output_file
    config = build_config(experiment, values)

    print("=" * 50)
    print(f"bridgelab: {experiment}")
    print("=" * 50)
    grid = config.grid
    print(f"Grid: [{grid.x_min}, {grid.x_max}], n={grid.n}, {grid.mode}")
    physics = config.physics
    print(f"Physics: hbar={physics.hbar}, mass={physics.mass}, sigma={physics.sigma}")
    if experiment == "check":
        print(f"Seed: {config.seed}, states: {config.schedule.n_samples}")

    record = run_experiment(config, progress=not silent, max_workers=max_workers)

    output_file = config.output.path or config.default_output()
    print(f"\nSaving {len(record.rows)} rows to {output_file}...")
    write_record(record, output_file, config.output.format)

    if record.failures:
        if not silent:
            print("\nFailed checks:")
            print("-" * 50)
            for failure in record.failures:
                print(failure)
        raise InvariantFailure(f"{len(record.failures)} check(s) failed; see {output_file}")

    print("=" * 50)
    print("Experiment complete!")
    print("=" * 50)
    return Path(output_file)


def cli():
    """Command-line interface entry point."""
    parser = argparse.ArgumentParser(
        description="Run a Schrödinger-bridge / NLGT experiment and write its table"
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="Experiment to run")
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="key=value config file (defaults to the experiment's built-in parameters)",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help=(
            "Output file (defaults to <experiment>.bridgelab.<format>, "
            "written to the current working directory)"
        ),
    )
    parser.add_argument(
        "--format", choices=OUTPUT_FORMATS, default=None, help="Output format (default: csv)"
    )
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized states")
    parser.add_argument(
        "--max-workers",
        type=int,
        default=None,
        help="Maximum number of worker processes for check and nlgt-sweep (defaults to CPU count)",
    )
    parser.add_argument(
        "--silent",
        action="store_true",
        help="Suppress progress bars and the failure listing",
    )
    parser.add_argument(
        "--log-level", choices=LOG_LEVELS, default="warning", help="Logging level"
    )

    args = parser.parse_args()
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)

    try:
        main(
            args.experiment,
            config_path=args.config,
            output_file=args.out,
            fmt=args.format,
            seed=args.seed,
            silent=args.silent,
            max_workers=args.max_workers,
        )
    except NonConvergence as e:
        print(f"Error: {e} (residual {e.residual}, iterations {e.iterations})", file=sys.stderr)
        sys.exit(e.exit_code)
    except BridgeLabError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    cli()
