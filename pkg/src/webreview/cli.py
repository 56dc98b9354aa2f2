"""Command line entry point: ``webreview <stage> --protocol FILE --workdir DIR``."""

from __future__ import annotations

import argparse
import logging
import sys

from webreview.pipeline.stages import STAGES, PipelineError, run_all, run_stage
from webreview.protocol import ProtocolError, load_protocol

EXIT_OK, EXIT_USAGE, EXIT_STAGE, EXIT_DEPENDENCY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="webreview", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--protocol", required=True, help="review protocol (YAML)")
        p.add_argument("--workdir", required=True, help="directory holding all stage artifacts")
        p.add_argument("--force", action="store_true", help="rerun even if inputs are unchanged")
        p.add_argument("--offline", action="store_true",
                       help="fixture engines and stored/snapshot pages only; no network")

    for stage in STAGES:
        common(sub.add_parser(stage, help=f"run the {stage} stage"))
    common(sub.add_parser("run-all", help="run every stage in order"))
    v = sub.add_parser("validate", help="check a protocol and list diagnostics")
    v.add_argument("--protocol", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            load_protocol(args.protocol)
            print("protocol OK")
            return EXIT_OK
        if args.command == "run-all":
            entries = run_all(args.protocol, args.workdir, force=args.force, offline=args.offline)
        else:
            entries = [run_stage(args.command, args.protocol, args.workdir,
                                 force=args.force, offline=args.offline)]
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    for e in entries:
        print(f"{e['stage']}: {e['status']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
