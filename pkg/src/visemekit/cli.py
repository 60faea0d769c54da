"""Command-line driver.

    visemekit {prepare,analyze,train,evaluate,all} --config EXP.cfg
    visemekit decode --config EXP.cfg [--from-text] LINE

Exit status: 0 success, 1 invalid config or inputs, 2 failure while running.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, VisemeKitError
from .pipeline import STAGES, decode_line, load_config, run_experiment

VALIDATION_EXIT = 1
RUNTIME_EXIT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visemekit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("all", "decode"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value experiment file")
        p.add_argument("--stage", choices=STAGES + ("all",), help="run this stage instead of the subcommand")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="print nothing but errors")
        if name == "decode":
            p.add_argument("line", help="space-separated viseme tokens")
            p.add_argument("--from-text", action="store_true", help="treat LINE as plain text")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="visemekit: %(message)s")
    stage = args.stage or args.command
    try:
        cfg = load_config(args.config, {"seed": args.seed})
    except ConfigError as exc:
        print(f"visemekit: config error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT

    try:
        if args.command == "decode" and args.stage is None:
            cfg.validate(())
            print(decode_line(cfg, args.line, args.from_text))
            return 0
        run_experiment(cfg, stage, quiet=args.quiet)
    except ConfigError as exc:
        print(f"visemekit: config error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except (VisemeKitError, OSError) as exc:
        where = getattr(exc, "__stage__", stage)
        print(f"visemekit: {where} failed: {exc}".replace("\n", " "), file=sys.stderr)
        return RUNTIME_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
