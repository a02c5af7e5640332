"""Command-line entry point: ``deit <scenario> --config <path> --out <dir>``."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DeitError, ParameterError
from .scenarios import SCENARIO_NAMES, ScenarioSpec, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deit",
        description="Tripod double-EIT simulator: run a named scenario and "
                    "write CSV artifacts.",
    )
    parser.add_argument("scenario", choices=SCENARIO_NAMES,
                        help="which scenario to run")
    parser.add_argument("--config", required=True,
                        help="path to the JSON configuration file")
    parser.add_argument("--out", required=True,
                        help="output directory (created if missing)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config entry (dotted path), repeatable")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for sweep scenarios")
    parser.add_argument("--timestamp", action="store_true",
                        help="embed a generation timestamp in CSV headers "
                             "(breaks byte-identical reruns)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching EXIT_CONFIG
        return int(exc.code) if exc.code else EXIT_OK
    spec = ScenarioSpec(
        name=args.scenario,
        config_path=args.config,
        out_dir=args.out,
        overrides=tuple(args.overrides),
        jobs=args.jobs,
        embed_timestamp=args.timestamp,
    )
    try:
        report = run_scenario(spec)
    except (ConfigError, ParameterError) as exc:
        print(f"deit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DeitError as exc:
        print(f"deit: numerical failure in scenario {args.scenario}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    for path in report.outputs:
        print(path)
    print(report.manifest)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
