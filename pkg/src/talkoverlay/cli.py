"""Command line entry points: serve, replay, extract, report."""

from __future__ import annotations

import argparse
import sys

from .config import AppConfig, ConfigError
from .keywords import KeywordExtractor


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talkoverlay")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the websocket overlay server")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--config", default=None, help="JSON config file")
    serve.add_argument("--mapping", required=True, help="mapping table JSON file")
    serve.add_argument("--debug-gestures", action="store_true")

    replay = sub.add_parser("replay", help="re-run a recorded trace deterministically")
    replay.add_argument("--trace", required=True)
    replay.add_argument("--out", required=True)

    extract = sub.add_parser("extract", help="print keywords found in a sentence")
    extract.add_argument("text")
    extract.add_argument("--config", default=None)

    report = sub.add_parser("report", help="render CSV and figures from a replay timeline")
    report.add_argument("--timeline", required=True)
    report.add_argument("--out-dir", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        from .server import serve

        try:
            config = AppConfig.load(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        serve(config, args.mapping, args.port, debug_gestures=args.debug_gestures)
        return 0

    if args.command == "replay":
        from .replay import TraceParseError, replay

        try:
            replay(args.trace, args.out)
        except TraceParseError as exc:
            print(f"trace error: {exc}", file=sys.stderr)
            return 2
        return 0

    if args.command == "extract":
        try:
            AppConfig.load(args.config)  # validates early, same as other paths
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        extractor = KeywordExtractor()
        for keyword in extractor.keywords(args.text):
            print(keyword)
        return 0

    if args.command == "report":
        from .report import write_report

        paths = write_report(args.timeline, args.out_dir)
        for name in ("csv", "lifespans", "positions"):
            print(paths[name])
        return 0

    return 2  # unreachable: argparse enforces the subcommand


if __name__ == "__main__":
    raise SystemExit(main())
