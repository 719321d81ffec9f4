"""
`opt` subcommand: exact offline optimum of an instance file.
"""

import argparse
from typing import TextIO

from src.commands import emit, load_instance
from src.models.domain import format_weight
from src.services.oracle import offline_optimum


def register(subparsers) -> None:
    parser = subparsers.add_parser("opt", help="Heaviest feasible subset and its EDF schedule")
    parser.add_argument("instance", help="Instance file")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    instance = load_instance(args.instance)
    result = offline_optimum(instance, args.oracle_budget)
    emit(out, f"gain {format_weight(result.gain)}")
    emit(out, "subset " + " ".join(str(job_id) for job_id in result.subset))
    if result.witness.length:
        emit(out, result.witness.to_text())
    return 0
