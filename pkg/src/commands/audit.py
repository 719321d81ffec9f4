"""
`audit` subcommand: charge table of one policy run against the optimum.
"""

import argparse
import csv
from typing import List, TextIO

from src.commands import emit, load_instance
from src.models.charging import LedgerRow, Violation
from src.services.charging import (
    build_general_ledger,
    competitive_bound,
    conservative_audit,
    conservative_rows,
    ledger_rows,
    run_ledger_checks,
)
from src.services.oracle import offline_optimum
from src.services.policies import ConservativePolicy, check_argmax, policy_from_name
from src.services.simulator import simulate
from src.utils.exceptions import ConfigurationError
from src.utils.logging import logger


def register(subparsers) -> None:
    parser = subparsers.add_parser("audit", help="Charge a policy run against the optimal schedule")
    parser.add_argument("instance", help="Instance file")
    parser.add_argument("--policy", required=True, help="Policy name")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    instance = load_instance(args.instance)
    policy = policy_from_name(args.policy)
    trace = simulate(instance, policy)
    optimum = offline_optimum(instance, args.oracle_budget)

    violations: List[Violation] = list(check_argmax(trace, instance, policy))
    if isinstance(policy, ConservativePolicy):
        report = conservative_audit(trace, optimum.witness, instance)
        violations.extend(report.violations)
        rows = conservative_rows(report, instance)
    elif policy.capacity is not None:
        ledger = build_general_ledger(trace, optimum.witness, instance, policy)
        reports = run_ledger_checks(ledger, competitive_bound(policy.name, instance.k))
        for report in reports:
            violations.extend(report.violations)
        rows = ledger_rows(ledger, reports)
    else:
        raise ConfigurationError(f"policy {policy.name} has no charging scheme", parameter="policy", value=args.policy)

    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LedgerRow.CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.to_csv_row())
    for violation in violations:
        emit(out, f"# {violation}")

    passed = not violations and all(row.passed for row in rows)
    emit(out, "PASS" if passed else f"FAIL {len(violations)} violation(s)")
    logger.debug("Audit finished", extra={"policy": policy.name, "targets": len(rows), "passed": passed})
    return 0 if passed else 2
