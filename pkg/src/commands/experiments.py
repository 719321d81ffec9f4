"""
`ratio` subcommand: empirical competitive ratios over a suite of instances.
"""

import argparse
from pathlib import Path
from typing import TextIO

from src.commands import emit
from src.models.experiment import ExperimentConfig, write_records_csv
from src.services.experiments import run_ratio_suite, summarise
from src.utils.exceptions import InstanceError


def register(subparsers) -> None:
    parser = subparsers.add_parser("ratio", help="Measure policy / optimum ratios over many instances")
    parser.add_argument("--config", help="YAML suite declaration, used instead of the flags below")
    parser.add_argument("--policy", action="append", dest="policies", help="Policy name, repeatable")
    parser.add_argument("--k", default="2", help="k values, e.g. `3`, `2..5` or `2,4`")
    parser.add_argument("--n", default="6", help="Instance sizes, same syntax as --k")
    parser.add_argument("--seeds", type=int, default=10, help="Seeds per (k, n), starting at --seed")
    parser.add_argument("--equal-lengths", action="store_true")
    parser.add_argument("--unit-weights", action="store_true")
    parser.add_argument("--integer-weights", action="store_true")
    parser.add_argument("--slack", type=float, default=1.0)
    parser.add_argument("--horizon", type=int, default=10)
    parser.add_argument("--instances", nargs="*", default=[], help="Instance files instead of the generator")
    parser.add_argument("--audit", action="store_true", help="Build and check the charge ledgers")
    parser.add_argument("--keep-going", action="store_true", help="Record audit violations instead of aborting")
    parser.add_argument("--output", help="Write the records as CSV to this file")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.set_defaults(handler=run)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_yaml(Path(args.config))
    else:
        if not args.policies:
            raise InstanceError("ratio needs --policy or --config")
        first_seed = args.seed if args.seed is not None else 0
        data = {
            "name": "cli",
            "policies": args.policies,
            "k": args.k,
            "n": args.n,
            "seeds": list(range(first_seed, first_seed + args.seeds)),
            "equal_lengths": args.equal_lengths,
            "unit_weights": args.unit_weights,
            "integer_weights": args.integer_weights,
            "slack": args.slack,
            "horizon": args.horizon,
            "instance_files": args.instances,
            "audit": args.audit,
            "keep_going": args.keep_going,
            "output": args.output,
        }
        config = ExperimentConfig.from_mapping(data)

    if args.oracle_budget is not None:
        config = config.model_copy(update={"oracle_budget": args.oracle_budget})
    return config


def run(args: argparse.Namespace, out: TextIO) -> int:
    config = build_config(args)
    records = run_ratio_suite(config, max_workers=args.workers)

    if not config.output:
        emit(out, write_records_csv(records))
    for summary in summarise(records):
        emit(out, summary.to_line())
    return 0
