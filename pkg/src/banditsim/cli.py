"""Command-line interface.

    banditsim run [CONFIG] [--preset NAME] [--out DIR] [--replications N]
                  [--master-seed N] [--jobs N] [--quiet]

CONFIG is a YAML experiment file (see config.py for the schema); --preset
may be used instead of, or together with, a file. Exit codes: 0 success,
2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback

import yaml

from .config import PRESETS, resolve_config
from .errors import ConfigError
from .runner import run_experiment

CONFIG_ERROR_EXIT = 2
RUNTIME_ERROR_EXIT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditsim",
        description="Seeded contextual-bandit simulation experiments with CSV output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run an experiment from a config file or preset")
    run_parser.add_argument("config", nargs="?", help="path to a YAML experiment config")
    run_parser.add_argument(
        "--preset", choices=sorted(PRESETS), help="named experiment preset to start from"
    )
    run_parser.add_argument("--out", help="output directory for the CSV files")
    run_parser.add_argument("--replications", type=int, help="override the replication count")
    run_parser.add_argument("--master-seed", type=int, help="override the master seed")
    run_parser.add_argument("--jobs", type=int, default=1, help="parallel replication workers")
    run_parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _load_raw(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if raw is None:
        raise ConfigError(f"config file {path} is empty")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return raw


def _run(args: argparse.Namespace) -> int:
    if args.config is None and args.preset is None:
        print("error: provide a config file, --preset, or both", file=sys.stderr)
        return CONFIG_ERROR_EXIT
    try:
        raw = _load_raw(args.config) if args.config is not None else {}
        if args.preset is not None:
            raw["preset"] = args.preset
        if args.out is not None:
            raw["output_dir"] = args.out
        if args.replications is not None:
            raw["replications"] = args.replications
        if args.master_seed is not None:
            raw["master_seed"] = args.master_seed
        config = resolve_config(raw)
        if config.output_dir is None:
            raise ConfigError("no output directory: set 'output_dir' in the config or pass --out")
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR_EXIT

    log = None if args.quiet else (lambda message: print(message, file=sys.stderr))
    try:
        run_experiment(config, jobs=args.jobs, log=log)
    except Exception:
        traceback.print_exc()
        print(
            f"runtime failure (master_seed={config.master_seed}); see traceback above",
            file=sys.stderr,
        )
        return RUNTIME_ERROR_EXIT
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _run(args)
    parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    return CONFIG_ERROR_EXIT  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
