"""Command line entry point: ``floodrisk <subcommand> --config run.toml``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .pipeline import STAGES, StageError, Workspace, run_matrix, run_pipeline, run_stage

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2
SUBCOMMANDS = tuple(STAGES) + ("pipeline", "matrix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floodrisk", description="Watershed-constrained AHP flood risk mapping.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP.get(name, f"run the {name} stage"))
        p.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        p.add_argument("--stage-output", type=Path, help="directory for intermediate and final files")
        p.add_argument(
            "--seedless",
            action="store_true",
            help="refuse anything nondeterministic (every stage is deterministic, so this only asserts it)",
        )
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
    return parser


_HELP = {
    "condition": "classify steady water and burn it into the DEM",
    "flowdir": "fill pits, write D8 and MFD direction grids",
    "accumulate": "D8 flow accumulation",
    "streams": "Strahler-ordered stream network with its link table",
    "delineate": "sub-watershed zone raster",
    "rate": "rate the five criteria on the 0-5 scale",
    "weights": "AHP weights and consistency check",
    "fri": "flood risk index (constrained and pixel)",
    "classify": "five natural-breaks risk classes",
    "validate": "correct/fit/F1 report against the flood masks",
    "pipeline": "run every stage in order",
    "matrix": "score every zoning and statistic combination against pixel AHP",
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse reports usage errors with status 2, which is reserved for stage failures
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seedless:
        cfg.seedless = True
    out = args.stage_output or cfg.output_dir
    try:
        if args.command == "pipeline":
            run_pipeline(cfg, out)
        elif args.command == "matrix":
            run_matrix(cfg, out)
        else:
            ws = Workspace(cfg, out)
            try:
                run_stage(args.command, ws)
            except StageError:
                ws.cleanup()
                raise
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
