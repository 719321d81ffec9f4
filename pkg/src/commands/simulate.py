"""
`simulate` and `gen` subcommands.
"""

import argparse
from pathlib import Path
from typing import TextIO

from src.commands import emit, load_instance
from src.models.domain import format_weight
from src.services.experiments import random_instance
from src.services.policies import policy_from_name
from src.services.simulator import gain, simulate


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Run an online policy over an instance file")
    parser.add_argument("instance", help="Instance file")
    parser.add_argument("--policy", required=True, help="smith, smith:remaining, expcap:c=<real>, conservative, srpt, edf")
    parser.set_defaults(handler=run)

    generator = subparsers.add_parser("gen", help="Write a seeded random instance")
    generator.add_argument("--k", type=int, required=True, help="Processing-time bound")
    generator.add_argument("--n", type=int, required=True, help="Number of jobs")
    generator.add_argument("--equal-lengths", action="store_true", help="All jobs have p = k")
    generator.add_argument("--unit-weights", action="store_true")
    generator.add_argument("--integer-weights", action="store_true")
    generator.add_argument("--slack", type=float, default=1.0, help="Mean deadline slack as a multiple of p")
    generator.add_argument("--horizon", type=int, default=10, help="Releases fall in [0, horizon)")
    generator.add_argument("--output", help="Write to this file instead of stdout")
    generator.set_defaults(handler=run_gen)


def run(args: argparse.Namespace, out: TextIO) -> int:
    instance = load_instance(args.instance)
    trace = simulate(instance, policy_from_name(args.policy))
    emit(out, trace.to_text())
    emit(out, f"gain {format_weight(gain(trace, instance))}")
    return 0


def run_gen(args: argparse.Namespace, out: TextIO) -> int:
    instance = random_instance(
        args.seed if args.seed is not None else 0,
        args.k, args.n,
        equal_lengths=args.equal_lengths,
        unit_weights=args.unit_weights,
        slack=args.slack,
        horizon=args.horizon,
        integer_weights=args.integer_weights
    )
    if args.output:
        Path(args.output).write_text(instance.to_text())
    else:
        emit(out, instance.to_text())
    return 0
