"""Command-line front end.

    cocstab {lyapunov|datko|induce|temper|uniform|flow} --config FILE [--seed N] [--out DIR]
    cocstab registry [--write DIR] [--run NAME] [--out DIR]

The subcommand must match the config's experiment kind.  Exit codes:
0 verdict-positive, 2 verdict-negative, 3 inconclusive, 1 error.  The
default output directory is $COCSTAB_OUT or ./runs/<kind>.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import EXPERIMENT_KINDS, ConfigError, load_config
from .registry import registry_list, template_config
from .runner import run_experiment


def _default_out(kind_or_name: str, explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    root = os.environ.get("COCSTAB_OUT", "runs")
    return Path(root) / kind_or_name


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocstab", description="Stability diagnostics for linear cocycles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment from a config file")
        p.add_argument("--config", required=True, help="path to the experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default $COCSTAB_OUT or ./runs/<kind>)")
    reg = sub.add_parser("registry", help="list built-in experiment templates")
    reg.add_argument("--write", default=None, help="write every template config into this directory")
    reg.add_argument("--run", default=None, help="run one named template")
    reg.add_argument("--out", default=None, help="output directory for --run")
    reg.add_argument("--seed", type=int, default=None, help="seed override for --run")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "registry":
            return _registry_command(args)
        config = load_config(args.config)
        if config.kind != args.command:
            print(
                f"error: config declares kind {config.kind!r} but the {args.command!r} subcommand was invoked",
                file=sys.stderr,
            )
            return 1
        if args.seed is not None:
            config.seed = args.seed
        record = run_experiment(config, _default_out(config.kind, args.out))
        print(f"{record.kind}: {record.verdict} (outputs in {record.out_dir})")
        print(f"wall time: {record.wall_time_s:.2f} s", file=sys.stderr)
        return record.exit_code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _registry_command(args) -> int:
    templates = registry_list()
    if args.write:
        target = Path(args.write)
        target.mkdir(parents=True, exist_ok=True)
        for name, entry in templates.items():
            (target / f"{name}.json").write_text(json.dumps(entry["config"], indent=2, sort_keys=True) + "\n")
        print(f"wrote {len(templates)} template configs to {target}")
        return 0
    if args.run:
        config = template_config(args.run)
        if args.seed is not None:
            config.seed = args.seed
        record = run_experiment(config, _default_out(args.run, args.out))
        print(f"{args.run}: {record.verdict} (outputs in {record.out_dir})")
        print(f"wall time: {record.wall_time_s:.2f} s", file=sys.stderr)
        return record.exit_code
    listing = {name: entry["statement"] for name, entry in templates.items()}
    print(json.dumps(listing, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
