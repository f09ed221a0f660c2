"""``semival`` command line: value, range, game and filter-flips."""

from __future__ import annotations

import argparse
import sys

from pydantic import ValidationError

from .commands import COMMANDS, write_report
from .config import load_config
from .errors import ConfigError, SemivalError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semival", description="Semivalue data valuation and utility-gaming runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("value", "semivalues of a single utility"),
        ("range", "worst-case favorability range over a candidate family"),
        ("game", "most/least favorable utility for a target group"),
        ("filter-flips", "observations whose bottom-alpha filter outcome depends on the utility"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out", required=True, help="output directory for report.json and CSV tables")
        p.add_argument("--threads", type=int, default=1, help="worker threads; affects speed only")
        if name == "game":
            p.add_argument("--oracle", action="store_true", help="certify against the brute-force oracle")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        kwargs = {"threads": args.threads}
        if args.command == "game":
            kwargs["oracle"] = args.oracle
        report = COMMANDS[args.command](cfg, **kwargs)
        path = write_report(report, args.out)
    except ValidationError as exc:
        print(f"semival: config error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except SemivalError as exc:
        print(f"semival: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"semival: data error: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
