"""
`adversary` subcommand: play a lower-bound construction against a policy.
"""

import argparse
from typing import TextIO

from src.commands import emit
from src.models.domain import format_weight
from src.services.adversaries import (
    depth_for_k,
    equal_length_adversary,
    k_over_lnk_adversary,
    log_over_loglog_adversary,
)
from src.services.policies import policy_from_name
from src.utils.exceptions import ConfigurationError

CONSTRUCTIONS = ["equal-length", "log-loglog", "k-lnk"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("adversary", help="Play an adaptive lower-bound construction")
    parser.add_argument("name", choices=CONSTRUCTIONS, help="Construction to play")
    parser.add_argument("--policy", required=True, help="Policy name")
    parser.add_argument("--k", type=int, help="Processing-time bound")
    parser.add_argument("--R", type=float, default=2.59, help="Target ratio of the equal-length game")
    parser.add_argument("--l", type=int, dest="level", help="Depth of the log-loglog construction")
    parser.add_argument("--max-steps", type=int, help="Release limit of the equal-length game")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    policy = policy_from_name(args.policy)

    if args.name == "equal-length":
        outcome = equal_length_adversary(args.R, args.k or 2, policy, args.max_steps, args.precision)
    elif args.name == "log-loglog":
        if args.level is None and args.k is None:
            raise ConfigurationError("log-loglog needs --l or --k", parameter="l")
        level = args.level if args.level is not None else depth_for_k(args.k)
        outcome = log_over_loglog_adversary(level, policy)
    else:
        if args.k is None:
            raise ConfigurationError("k-lnk needs --k", parameter="k")
        outcome = k_over_lnk_adversary(args.k, policy)

    for line in outcome.instance.to_text().splitlines():
        emit(out, f"# {line}")
    if outcome.trace.length:
        emit(out, outcome.trace.to_text())
    emit(out, f"algorithm_gain {format_weight(outcome.algorithm_gain)}")
    emit(out, f"adversary_gain {format_weight(outcome.adversary_gain)}")
    emit(out, f"forced_ratio {outcome.forced_ratio!r}")
    return 0
