"""
Charging audits.

Rebuilds, on a concrete pair of schedules, the accounting that moves every
adversary unit's value w_j / p_j onto a job the algorithm completed, then checks
the per-target inequalities that make the accounting a competitiveness proof.
Violations are returned as values; callers decide whether they are fatal.
"""

import math
from bisect import bisect_left
from heapq import heappop, heappush
from typing import Dict, List, Optional, Set, Tuple, Union

from src.config import settings
from src.models.charging import (
    Charge,
    ChargeKind,
    ChargeLedger,
    CheckReport,
    ConservativeAuditReport,
    IntervalLabel,
    LedgerRow,
    Violation,
)
from src.models.domain import Instance, Trace, pending_at
from src.services.policies import (
    CapacityFunction,
    OnlinePolicy,
    UnitCapacity,
    check_monotonicity,
    check_validity,
    expcap_claimed_ratio,
    run_rho,
    slot_capacities,
)
from src.services.simulator import critical_time, validate_trace
from src.utils.exceptions import ConfigurationError
from src.utils.logging import log_audit_result
from src.utils.numeric import approx_ge, approx_le, harmonic


def _capacity(source: Union[CapacityFunction, OnlinePolicy]) -> CapacityFunction:
    if isinstance(source, CapacityFunction):
        return source
    if source.capacity is None:
        raise ConfigurationError(f"policy {source.name} has no capacity function", parameter="policy")
    return source.capacity


def build_general_ledger(alg: Trace, adv: Trace, instance: Instance,
                         capacity: Union[CapacityFunction, OnlinePolicy]) -> ChargeLedger:
    """Classify every unit of every adversary-completed job as a type 1, 2 or 3 charge."""
    pi = _capacity(capacity)
    rho = run_rho(pi, alg, instance)
    capacities = slot_capacities(alg, instance, pi)

    completions = sorted((time, job_id) for job_id, time in alg.completions.items())
    completion_times = [time for time, _ in completions]

    def next_completion(t: int) -> Optional[Tuple[int, int]]:
        index = bisect_left(completion_times, t)
        return completions[index] if index < len(completions) else None

    def capacity_at(t: int) -> float:
        return capacities[t] if t < len(capacities) else -math.inf

    violations: List[Violation] = []
    violations.extend(check_monotonicity(alg, instance, pi, rho=rho))
    violations.extend(check_validity(alg, instance, pi))

    target_capacity: Dict[int, float] = {}
    target_weight: Dict[int, float] = {}
    for time, job_id in completions:
        job = instance.job(job_id)
        target_weight[job_id] = job.w
        k_star = max((other.p for other in instance.jobs if other.r <= time - 1), default=None)
        if k_star is None:
            violations.append(Violation(
                kind="completion", job_id=job_id,
                message=f"job {job_id} completes at {time} before any job is released"
            ))
            continue
        target_capacity[job_id] = pi.evaluate(job.w, 1, k_star)

    charges: List[Charge] = []
    reported_idle: Set[Tuple[int, int]] = set()
    critical: Dict[int, Optional[int]] = {}
    scanned_gaps: Set[Tuple[int, int]] = set()
    idle_stretches = [(start, end) for start, end, running, _ in alg.segments() if running is None]

    def idle_slots(start: int, end: int) -> List[int]:
        return [
            t
            for low, high in idle_stretches
            if low < end and high > start
            for t in range(max(low, start), min(high, end))
        ]

    for job_id in sorted(adv.completions):
        job = instance.job(job_id)
        amount = job.w / job.p

        for t, b in adv.runs_of(job_id):
            if alg.completed_by(job_id, t):
                charges.append(Charge(job=job_id, b=b, slot=t, target=job_id,
                                      kind=ChargeKind.SELF, amount=amount, p=job.p))
                continue

            if alg.unit_at(t) is not None and approx_ge(capacity_at(t), amount):
                following = next_completion(t + 1)
                if following is None:
                    violations.append(Violation(
                        kind="uncharged", slot=t, job_id=job_id,
                        message=f"type 2 unit of job {job_id} has no later algorithm completion"
                    ))
                    continue
                charges.append(Charge(job=job_id, b=b, slot=t, target=following[1],
                                      kind=ChargeKind.FORWARD, amount=amount, p=job.p))
                continue

            if pending_at(alg, job, t):
                violations.append(Violation(
                    kind="validity", slot=t, job_id=job_id, observed=capacity_at(t), limit=amount,
                    message=f"job {job_id} is pending but the algorithm runs capacity below {amount}"
                ))
                continue

            if job_id not in critical:
                critical[job_id] = critical_time(alg, job)
            s = critical[job_id]
            if s is None:
                violations.append(Violation(
                    kind="uncharged", slot=t, job_id=job_id,
                    message=f"job {job_id} was never pending for the algorithm"
                ))
                continue

            following = next_completion(s + 1)
            if following is None:
                violations.append(Violation(
                    kind="uncharged", slot=t, job_id=job_id,
                    message=f"no algorithm completion after critical time {s} of job {job_id}"
                ))
                continue

            completion, target = following
            if (s, completion) not in scanned_gaps:
                scanned_gaps.add((s, completion))
                for idle in idle_slots(s, completion):
                    if (idle, target) not in reported_idle:
                        reported_idle.add((idle, target))
                        violations.append(Violation(
                            kind="type3-idle", slot=idle, job_id=job_id, target_id=target,
                            message=f"algorithm idles at {idle} between critical time {s} and completion {completion}"
                        ))
            charges.append(Charge(job=job_id, b=b, slot=t, target=target,
                                  kind=ChargeKind.CRITICAL, amount=amount, p=job.p))

    return ChargeLedger(
        capacity=pi.name,
        rho=rho,
        k=instance.k,
        charges=charges,
        violations=violations,
        target_capacity=target_capacity,
        target_weight=target_weight,
        algorithm_gain=float(sum(target_weight.values())),
        adversary_gain=float(sum(instance.job(job_id).w for job_id in adv.completions))
    )


def check_type3_bound(ledger: ChargeLedger, k: Optional[int] = None) -> CheckReport:
    """Fewer than p type-3 units with p_j <= p per target, each at most pi(i0, 1)."""
    k = ledger.k if k is None else k
    unit_capacity = ledger.capacity == UnitCapacity.name
    violations: List[Violation] = []

    for target, totals in ledger.totals().items():
        charged = ledger.charges_to(target, ChargeKind.CRITICAL)
        if not charged:
            continue
        lengths = sorted(charge.p for charge in charged)
        # count(p) = #lengths <= p is constant from one charged length up to the next
        for index, length in enumerate(lengths):
            if index + 1 < len(lengths) and lengths[index + 1] == length:
                continue
            count = index + 1
            upper = lengths[index + 1] - 1 if index + 1 < len(lengths) else k
            for p in range(length, min(count, upper, k) + 1):
                violations.append(Violation(
                    kind="type3-count", target_id=target, observed=count, limit=p - 1,
                    message=f"target {target} has {count} type 3 units with p_j <= {p}"
                ))
        if len(charged) > k - 1:
            violations.append(Violation(
                kind="type3-count", target_id=target, observed=len(charged), limit=k - 1,
                message=f"target {target} has {len(charged)} type 3 units, more than k - 1"
            ))

        limit = ledger.target_capacity.get(target)
        for charge in charged:
            if limit is None or not approx_le(charge.amount, limit):
                violations.append(Violation(
                    kind="type3-amount", slot=charge.slot, job_id=charge.job, target_id=target,
                    observed=charge.amount, limit=limit,
                    message=f"type 3 amount {charge.amount} exceeds pi(i0, 1) = {limit}"
                ))

        if unit_capacity and not approx_le(totals.type3_total, harmonic(k) - 1):
            violations.append(Violation(
                kind="type3-total", target_id=target, observed=totals.type3_total, limit=harmonic(k) - 1,
                message=f"type 3 total {totals.type3_total} exceeds H_k - 1"
            ))

    return CheckReport(check="type3", violations=violations)


def check_type2_bound(ledger: ChargeLedger) -> CheckReport:
    """Type-2 total per target at most pi(i0, 1) / (1 - rho); at most H_k for unit capacities."""
    violations: List[Violation] = []
    if ledger.rho >= 1:
        violations.append(Violation(
            kind="rho", observed=ledger.rho, limit=1.0,
            message=f"monotonicity constant {ledger.rho} is not below 1"
        ))
        return CheckReport(check="type2", violations=violations)

    unit_capacity = ledger.capacity == UnitCapacity.name
    for target, totals in ledger.totals().items():
        limit = ledger.target_capacity.get(target, 0.0) / (1 - ledger.rho)
        if not approx_le(totals.type2_total, limit):
            violations.append(Violation(
                kind="type2-total", target_id=target, observed=totals.type2_total, limit=limit,
                message=f"type 2 total {totals.type2_total} exceeds pi(i0, 1) / (1 - rho) = {limit}"
            ))
        if unit_capacity and not approx_le(totals.type2_total, harmonic(ledger.k)):
            violations.append(Violation(
                kind="type2-total", target_id=target, observed=totals.type2_total, limit=harmonic(ledger.k),
                message=f"type 2 total {totals.type2_total} exceeds H_k"
            ))

    return CheckReport(check="type2", violations=violations)


def check_type1_bound(ledger: ChargeLedger) -> CheckReport:
    """Type-1 total per target at most the target's own weight."""
    violations = [
        Violation(
            kind="type1-total", target_id=target, observed=totals.type1_total,
            limit=ledger.target_weight.get(target, 0.0),
            message=f"type 1 total {totals.type1_total} exceeds w_{target}"
        )
        for target, totals in ledger.totals().items()
        if not approx_le(totals.type1_total, ledger.target_weight.get(target, 0.0))
    ]
    return CheckReport(check="type1", violations=violations)


def check_conservation(ledger: ChargeLedger) -> CheckReport:
    """Charged amounts add up to the adversary's gain."""
    violations: List[Violation] = []
    if not math.isclose(ledger.total_charged, ledger.adversary_gain,
                        rel_tol=settings.float_tolerance, abs_tol=settings.float_tolerance):
        violations.append(Violation(
            kind="conservation", observed=ledger.total_charged, limit=ledger.adversary_gain,
            message=f"charged {ledger.total_charged} but the adversary gained {ledger.adversary_gain}"
        ))
    return CheckReport(check="conservation", violations=violations)


def check_competitiveness(ledger: ChargeLedger, bound: Optional[float]) -> CheckReport:
    """Adversary gain at most bound times algorithm gain; skipped when no bound is claimed."""
    violations: List[Violation] = []
    if bound is not None and not approx_le(ledger.adversary_gain, bound * ledger.algorithm_gain):
        violations.append(Violation(
            kind="competitiveness", observed=ledger.adversary_gain, limit=bound * ledger.algorithm_gain,
            message=f"adversary gain {ledger.adversary_gain} exceeds {bound} x {ledger.algorithm_gain}"
        ))
    return CheckReport(check="competitiveness", violations=violations)


def competitive_bound(policy_name: str, k: int, c: Optional[float] = None) -> Optional[float]:
    """Competitive ratio claimed for a policy at bound k, or None when none is claimed."""
    name = policy_name.split(":", 1)[0]
    if name == "smith":
        return 2.0 * k
    if name == "expcap":
        if c is None:
            _, _, option = policy_name.partition("=")
            c = float(option) if option else settings.expcap_c
        return expcap_claimed_ratio(k, c)
    if name == "conservative":
        return 5.0
    if name == "srpt":
        return 2.0 * harmonic(k)
    return None


def scheme_bound(ledger: ChargeLedger, target: int) -> float:
    """Per-target total allowed by the type 1, 2 and 3 lemmas together."""
    weight = ledger.target_weight.get(target, 0.0)
    first = ledger.target_capacity.get(target, 0.0)
    if ledger.capacity == UnitCapacity.name:
        return weight + 2 * harmonic(ledger.k) - 1
    return weight + first / (1 - ledger.rho) + (ledger.k - 1) * first


def run_ledger_checks(ledger: ChargeLedger, bound: Optional[float] = None) -> List[CheckReport]:
    """All ledger-level checks, construction violations first."""
    reports = [
        CheckReport(check="construction", violations=list(ledger.violations)),
        check_type1_bound(ledger),
        check_type2_bound(ledger),
        check_type3_bound(ledger),
        check_conservation(ledger),
        check_competitiveness(ledger, bound),
    ]
    violation_count = sum(len(report.violations) for report in reports)
    log_audit_result("general", len(ledger.target_weight), violation_count, capacity=ledger.capacity)
    return reports


def ledger_rows(ledger: ChargeLedger, reports: Optional[List[CheckReport]] = None) -> List[LedgerRow]:
    """Per-target table: charge totals, the scheme bound and whether the target is clean."""
    reports = run_ledger_checks(ledger) if reports is None else reports
    flagged = {
        violation.target_id
        for report in reports
        for violation in report.violations
        if violation.target_id is not None
    }
    rows = []
    for target, totals in ledger.totals().items():
        bound = scheme_bound(ledger, target)
        rows.append(LedgerRow(
            target_id=target,
            type1_total=totals.type1_total,
            type2_total=totals.type2_total,
            type3_total=totals.type3_total,
            type3_count=totals.type3_count,
            bound=bound,
            passed=target not in flagged and approx_le(totals.total, bound)
        ))
    return rows


# Equal-length interval audit

def _check_adversary_edf(adv: Trace, instance: Instance) -> None:
    """The adversary completes every job it starts and always runs the earliest deadline."""
    issues = validate_trace(adv, instance)
    if issues:
        raise ConfigurationError(f"adversary trace is malformed: {issues[0]}", parameter="adversary")

    started = {unit.job for unit in adv.slots if unit is not None}
    unfinished = sorted(started - set(adv.completions))
    if unfinished:
        raise ConfigurationError(
            f"adversary starts jobs {unfinished} without completing them", parameter="adversary"
        )

    scheduled = [instance.job(job_id) for job_id in sorted(adv.completions)]
    for t, unit in enumerate(adv.slots):
        ready = [
            job for job in scheduled
            if job.r <= t and not adv.completed_by(job.id, t)
        ]
        if not ready:
            continue
        earliest = min(job.d for job in ready)
        if unit is None or instance.job(unit.job).d != earliest:
            raise ConfigurationError(
                f"adversary trace is not earliest-deadline-first at slot {t}",
                parameter="adversary", value=t
            )


def conservative_intervals(completions: List[Tuple[int, int]], k: int) -> List[IntervalLabel]:
    """Split each [C_{i-1}, C_i) into intervals labelled (b, i), the last ones of length k."""
    intervals: List[IntervalLabel] = []
    previous = 0
    for completion, job_id in completions:
        a = -(-(completion - previous) // k)
        intervals.append(IntervalLabel(start=previous, end=completion - (a - 1) * k, b=a - 1, i=job_id))
        for b in range(a - 2, -1, -1):
            intervals.append(IntervalLabel(start=completion - (b + 1) * k, end=completion - b * k, b=b, i=job_id))
        previous = completion
    return intervals


def conservative_audit(alg: Trace, adv: Trace, instance: Instance,
                       k: Optional[int] = None) -> ConservativeAuditReport:
    """Interval marking audit of the equal-length policy against an EDF adversary."""
    if not instance.equal_lengths:
        raise ConfigurationError("conservative audit needs an equal-length instance", parameter="equal_lengths")
    k = instance.k if k is None else k
    _check_adversary_edf(adv, instance)

    violations: List[Violation] = []
    self_charged = sorted(set(adv.completions) & set(alg.completions))
    completions = sorted((time, job_id) for job_id, time in alg.completions.items())
    intervals = conservative_intervals(completions, k)

    # partition of [0, C_n)
    cursor = 0
    first_of_block = True
    for interval in intervals:
        if interval.start != cursor or interval.length <= 0 or interval.length > k:
            violations.append(Violation(
                kind="partition", slot=interval.start, target_id=interval.i,
                message=f"interval [{interval.start}, {interval.end}) breaks the tiling"
            ))
        if not first_of_block and interval.length != k:
            violations.append(Violation(
                kind="partition", slot=interval.start, target_id=interval.i,
                message=f"inner interval [{interval.start}, {interval.end}) has length {interval.length}"
            ))
        first_of_block = interval.b == 0
        cursor = interval.end

    starts: Dict[int, int] = {}
    for job_id in adv.completions:
        if job_id not in alg.completions:
            starts[job_id] = adv.runs_of(job_id)[0][0]

    charges: Dict[int, List[int]] = {job_id: [] for _, job_id in completions}
    charge_weight: Dict[int, float] = {job_id: 0.0 for _, job_id in completions}
    pool: List[Tuple[int, int]] = []

    for interval in intervals:
        for job_id, start in sorted(starts.items()):
            if interval.start <= start < interval.end:
                heappush(pool, (instance.job(job_id).d, job_id))

        if pool:
            _, marked = heappop(pool)
            interval.mark = marked
            charges[interval.i].append(marked)
            weight = instance.job(marked).w
            charge_weight[interval.i] += weight
            limit = 2.0 ** (1 - interval.b) * instance.job(interval.i).w
            if not approx_le(weight, limit):
                violations.append(Violation(
                    kind="weight", slot=interval.start, job_id=marked, target_id=interval.i,
                    observed=weight, limit=limit,
                    message=f"job {marked} marked on ({interval.b}, {interval.i}) exceeds 2^(1-b) w_i"
                ))

        interval.pending = sorted(job_id for _, job_id in pool)
        for job_id in interval.pending:
            if not pending_at(alg, instance.job(job_id), interval.end):
                violations.append(Violation(
                    kind="pending", slot=interval.end, job_id=job_id, target_id=interval.i,
                    message=f"job {job_id} is in P but not pending for the algorithm at {interval.end}"
                ))

    horizon = completions[-1][0] if completions else 0
    if pool:
        violations.append(Violation(
            kind="leftover", slot=horizon,
            message=f"jobs {sorted(job_id for _, job_id in pool)} remain uncharged at C_n = {horizon}"
        ))
    late = sorted(job_id for job_id, start in starts.items() if start >= horizon)
    if late:
        violations.append(Violation(
            kind="leftover", slot=horizon,
            message=f"adversary starts jobs {late} at or after C_n = {horizon}"
        ))

    for job_id, weight in charge_weight.items():
        own = instance.job(job_id).w
        if not approx_le(weight, 4 * own):
            violations.append(Violation(
                kind="charge-total", target_id=job_id, observed=weight, limit=4 * own,
                message=f"job {job_id} receives {weight} from other jobs, more than 4 w"
            ))
        total = weight + (own if job_id in self_charged else 0.0)
        if not approx_le(total, 5 * own):
            violations.append(Violation(
                kind="charge-total", target_id=job_id, observed=total, limit=5 * own,
                message=f"job {job_id} receives {total} in total, more than 5 w"
            ))

    log_audit_result("conservative", len(completions), len(violations), k=k)
    return ConservativeAuditReport(
        k=k,
        intervals=intervals,
        self_charged=self_charged,
        charges=charges,
        charge_weight=charge_weight,
        violations=violations
    )


def conservative_rows(report: ConservativeAuditReport, instance: Instance) -> List[LedgerRow]:
    """Per-target table of the interval audit; marked jobs are reported in the type 2 column."""
    flagged = {violation.target_id for violation in report.violations if violation.target_id is not None}
    rows = []
    for target, weight in sorted(report.charge_weight.items()):
        own = instance.job(target).w
        self_total = own if target in report.self_charged else 0.0
        rows.append(LedgerRow(
            target_id=target,
            type1_total=self_total,
            type2_total=weight,
            type3_total=0.0,
            type3_count=0,
            bound=5 * own,
            passed=target not in flagged and approx_le(self_total + weight, 5 * own)
        ))
    return rows
