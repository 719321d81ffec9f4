"""
Command-line entry point for the deadline scheduling toolkit.
Parses global flags, dispatches to the subcommand handlers and maps errors
to exit codes.
"""

import argparse
import sys
from typing import List, Optional, TextIO

from src.commands import adversary, audit, experiments, oracle, simulate
from src.config import settings
from src.utils.exceptions import SchedulingError, format_exception_report, get_exit_code
from src.utils.logging import logger, setup_logging

USAGE_EXIT_CODE = 1


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with the toolkit's usage code."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT_CODE, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="deadline-sched",
        description="Online preemptive deadline scheduling: policies, optimum, audits and adversaries"
    )
    parser.add_argument("--seed", type=int, help="Seed for generated instances")
    parser.add_argument("--precision", type=int, help="Mantissa bits for adversary arithmetic (53 = double)")
    parser.add_argument("--oracle-budget", type=int, help="Largest job count the exact optimum accepts")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    simulate.register(subparsers)
    oracle.register(subparsers)
    experiments.register(subparsers)
    audit.register(subparsers)
    adversary.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None, out: Optional[TextIO] = None) -> int:
    """Run one subcommand and return its exit code."""
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    if args.precision is not None and args.precision < 24:
        logger.error("Precision must be at least 24 bits", extra={"precision": args.precision})
        return USAGE_EXIT_CODE

    logger.debug("Running command", extra={"command": args.command, "log_format": settings.log_format.value})
    try:
        return args.handler(args, out)
    except SchedulingError as e:
        code = get_exit_code(e)
        report = format_exception_report(e, args.command)
        logger.error(
            f"{e.__class__.__name__}: {e}",
            extra={"error": report["error"], "details": report["details"], "command": args.command, "exit_code": code}
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
