"""
Experiment harness service.
Generates seeded instances, measures policy gains against the exact optimum,
optionally audits every run, and summarises the resulting ratio records.
"""

import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import settings
from src.models.charging import ChargeKind, Violation
from src.models.domain import Instance, Job, Trace
from src.models.experiment import (
    ExperimentConfig,
    GeneratorSpec,
    RatioRecord,
    SuiteSummary,
    SuiteTask,
    TaskOutcome,
    write_records_csv,
)
from src.services.charging import (
    build_general_ledger,
    competitive_bound,
    conservative_audit,
    run_ledger_checks,
)
from src.services.oracle import offline_optimum
from src.services.policies import ConservativePolicy, OnlinePolicy, check_argmax, policy_from_name
from src.services.simulator import gain, simulate
from src.utils.exceptions import AuditViolationError, InstanceError
from src.utils.logging import log_suite_progress, logger
from src.utils.numeric import approx_le
from src.worker import execute_tasks


def random_instance(seed: int, k: int, n: int, equal_lengths: bool = False, unit_weights: bool = False,
                    slack: float = 1.0, horizon: int = 10, integer_weights: bool = False) -> Instance:
    """
    Seeded random instance.

    Releases are uniform in [0, horizon), lengths uniform in [1, k] (or k), and
    each deadline leaves a geometric slack of mean slack * p after r + p.
    Weights are 1, integers in [1, k^2], or log-uniform in [1, k^2].
    """
    if k < 1 or n < 0 or slack < 0 or horizon < 1:
        raise InstanceError(f"invalid generator parameters k={k}, n={n}, slack={slack}, horizon={horizon}")

    rng = np.random.default_rng(seed)
    releases = rng.integers(0, horizon, size=n)
    lengths = np.full(n, k) if equal_lengths else rng.integers(1, k + 1, size=n)
    extra = rng.geometric(1.0 / (1.0 + slack * lengths)) - 1

    if unit_weights:
        weights = np.ones(n)
    elif integer_weights:
        weights = rng.integers(1, k * k + 1, size=n).astype(float)
    else:
        weights = np.exp(rng.uniform(0.0, 2.0 * math.log(k), size=n))

    order = np.lexsort((np.arange(n), releases))
    jobs = [
        Job(
            id=new_id,
            r=int(releases[old]),
            p=int(lengths[old]),
            d=int(releases[old] + lengths[old] + extra[old]),
            w=float(weights[old])
        )
        for new_id, old in enumerate(order)
    ]
    return Instance(jobs=jobs, k=k, equal_lengths=equal_lengths)


def instance_from_spec(spec: GeneratorSpec, seed: int) -> Instance:
    return random_instance(
        seed, spec.k, spec.n,
        equal_lengths=spec.equal_lengths,
        unit_weights=spec.unit_weights,
        slack=spec.slack,
        horizon=spec.horizon,
        integer_weights=spec.integer_weights
    )


def smith_two_job_instance(k: int, eps: float = 0.01) -> Instance:
    """Job a (p = d = w = k) and job b (p = 1, d = k + 1, w = 1 + eps), both released at 0."""
    return Instance(
        jobs=[
            Job(id=0, r=0, p=k, d=k, w=float(k)),
            Job(id=1, r=0, p=1, d=k + 1, w=1.0 + eps),
        ],
        k=k
    )


def measured_ratio(oracle_gain: float, algorithm_gain: float) -> float:
    """Oracle over algorithm gain; +inf when only the oracle gains."""
    if algorithm_gain <= 0:
        return math.inf if oracle_gain > 0 else 1.0
    return oracle_gain / algorithm_gain


def _resolve_policy(name: str, expcap_c: Optional[float]) -> OnlinePolicy:
    if expcap_c is not None and name.strip().lower() == "expcap":
        name = f"expcap:c={expcap_c}"
    return policy_from_name(name)


def audit_run(policy: OnlinePolicy, instance: Instance, trace: Trace, witness: Trace,
              oracle_gain: float) -> Tuple[List[Violation], Dict[ChargeKind, float]]:
    """All audits that apply to one policy run; returns violations and per-kind totals."""
    violations: List[Violation] = list(check_argmax(trace, instance, policy))
    totals: Dict[ChargeKind, float] = {}
    bound = competitive_bound(policy.name, instance.k)

    if isinstance(policy, ConservativePolicy):
        report = conservative_audit(trace, witness, instance)
        violations.extend(report.violations)
        algorithm_gain = gain(trace, instance)
        if bound is not None and not approx_le(oracle_gain, bound * algorithm_gain):
            violations.append(Violation(
                kind="competitiveness", observed=oracle_gain, limit=bound * algorithm_gain,
                message=f"optimum {oracle_gain} exceeds {bound} x {algorithm_gain}"
            ))
        return violations, totals

    if policy.capacity is None:
        return violations, totals

    ledger = build_general_ledger(trace, witness, instance, policy)
    for report in run_ledger_checks(ledger, bound):
        violations.extend(report.violations)
    for kind in ChargeKind:
        totals[kind] = float(sum(charge.amount for charge in ledger.charges if charge.kind == kind))
    return violations, totals


def evaluate_task(task: SuiteTask) -> TaskOutcome:
    """Simulate, solve and optionally audit one suite task."""
    if task.instance_text is not None:
        instance = Instance.from_text(task.instance_text)
    else:
        instance = instance_from_spec(task.generator, task.seed or 0)

    policy = policy_from_name(task.policy)
    trace = simulate(instance, policy)
    algorithm_gain = gain(trace, instance)
    optimum = offline_optimum(instance, task.oracle_budget)

    violations: List[Violation] = []
    totals: Dict[ChargeKind, float] = {}
    if not approx_le(algorithm_gain, optimum.gain):
        violations.append(Violation(
            kind="dominance", observed=algorithm_gain, limit=optimum.gain,
            message=f"policy gained {algorithm_gain}, more than the optimum {optimum.gain}"
        ))
        return TaskOutcome(index=task.index, violations=violations, instance_text=instance.to_text())

    if task.audit:
        violations, totals = audit_run(policy, instance, trace, optimum.witness, optimum.gain)

    record = RatioRecord(
        instance=task.descriptor,
        policy=policy.name,
        k=instance.k,
        n=len(instance),
        seed=task.seed,
        algorithm_gain=algorithm_gain,
        oracle_gain=optimum.gain,
        ratio=measured_ratio(optimum.gain, algorithm_gain),
        type1_total=totals.get(ChargeKind.SELF),
        type2_total=totals.get(ChargeKind.FORWARD),
        type3_total=totals.get(ChargeKind.CRITICAL),
        violations=len(violations)
    )
    return TaskOutcome(index=task.index, record=record, violations=violations, instance_text=instance.to_text())


def build_tasks(config: ExperimentConfig) -> List[SuiteTask]:
    """Expand a suite declaration into tasks, in deterministic order."""
    policies = [_resolve_policy(name, config.expcap_c).name for name in config.policies]
    budget = config.oracle_budget
    tasks: List[SuiteTask] = []

    if config.instance_files:
        for path in config.instance_files:
            text = Path(path).read_text()
            for policy in policies:
                tasks.append(SuiteTask(
                    index=len(tasks), policy=policy, descriptor=f"file={path}",
                    instance_text=text, audit=config.audit, oracle_budget=budget
                ))
        return tasks

    for k in config.k_values:
        for n in config.n_values:
            spec = config.generator(k, n)
            for seed in config.seeds:
                for policy in policies:
                    tasks.append(SuiteTask(
                        index=len(tasks), policy=policy, descriptor=f"k={k},n={n},seed={seed}",
                        seed=seed, generator=spec, audit=config.audit, oracle_budget=budget
                    ))
    return tasks


def dump_violation(config: ExperimentConfig, outcome: TaskOutcome, output_dir: Optional[str] = None) -> Path:
    """Write the offending instance, prefixed by its violations as comments."""
    directory = Path(output_dir or settings.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{config.name}-violation-{outcome.index}.txt"
    comments = "".join(f"# {violation}\n" for violation in outcome.violations)
    path.write_text(comments + outcome.instance_text)
    return path


def run_ratio_suite(config: ExperimentConfig, max_workers: Optional[int] = None,
                    output_dir: Optional[str] = None) -> List[RatioRecord]:
    """
    Run every task of a suite and return the records in task order.

    Audit violations are fatal unless `keep_going` is set: the offending
    instance is dumped under the output directory and the run aborts.
    """
    tasks = build_tasks(config)
    logger.info("Running ratio suite", extra={"suite": config.name, "tasks": len(tasks)})

    records: List[RatioRecord] = []
    for done, outcome in enumerate(execute_tasks(tasks, evaluate_task, max_workers), start=1):
        log_suite_progress(config.name, done, len(tasks))
        if outcome.violations:
            path = dump_violation(config, outcome, output_dir)
            logger.warning(
                "Suite task has violations",
                extra={"suite": config.name, "task": outcome.index, "violations": len(outcome.violations),
                       "instance_path": str(path)}
            )
            if not config.keep_going:
                raise AuditViolationError(
                    f"task {outcome.index} of suite {config.name} violated {len(outcome.violations)} checks; "
                    f"instance written to {path}",
                    violations=[str(violation) for violation in outcome.violations],
                    instance_path=str(path)
                )
        if outcome.record is not None:
            records.append(outcome.record)

    if config.output:
        Path(config.output).write_text(write_records_csv(records))
    return records


def summarise(records: List[RatioRecord]) -> List[SuiteSummary]:
    """Max and mean ratio per (policy, k)."""
    groups: Dict[Tuple[str, int], List[float]] = defaultdict(list)
    for record in records:
        groups[(record.policy, record.k)].append(record.ratio)

    summaries = []
    for (policy, k), ratios in sorted(groups.items()):
        values = np.asarray(ratios, dtype=float)
        summaries.append(SuiteSummary(
            policy=policy,
            k=k,
            count=len(values),
            max_ratio=float(np.max(values)),
            mean_ratio=float(np.mean(values))
        ))
    return summaries
