"""
Online scheduling policies.

Every shipped policy runs, at each slot, the pending job with the largest priority;
ties go to the lowest job id. Capacity-driven policies also expose the capacity
function pi(i, a) and the monotonicity constant rho used by the charging audits.
"""

import math
from abc import ABC, abstractmethod
from bisect import bisect_right
from heapq import heappop, heappush
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.config import settings
from src.models.charging import Violation
from src.models.domain import Instance, Job, PendingView, Trace, Unit
from src.services.simulator import replay_segments
from src.utils.exceptions import ConfigurationError
from src.utils.numeric import approx_ge, approx_le_array


# Capacity functions

class CapacityFunction(ABC):
    """Capacity pi(i, a) of a unit of job i run with remaining time a."""

    name: str = "capacity"

    @abstractmethod
    def evaluate(self, w: float, a: int, k_star: int) -> float:
        """Capacity of a unit with weight w and remaining time a under bound k_star."""
        pass

    @abstractmethod
    def rho(self, k_star: int) -> float:
        """Monotonicity constant claimed for the policy maximizing this capacity."""
        pass

    def evaluate_run(self, w: float, a: int, count: int, k_star: int) -> np.ndarray:
        """Capacities of `count` consecutive units run with remaining a, a - 1, ..."""
        return np.array([self.evaluate(w, a - offset, k_star) for offset in range(count)], dtype=float)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}()"


class SmithCapacity(CapacityFunction):
    """pi(i, a) = w_i / a."""

    name = "w/a"

    def evaluate(self, w: float, a: int, k_star: int) -> float:
        return w / a

    def evaluate_run(self, w: float, a: int, count: int, k_star: int) -> np.ndarray:
        return w / np.arange(a, a - count, -1, dtype=float)

    def rho(self, k_star: int) -> float:
        k = max(k_star, 1)
        return (k - 1) / k


class ExponentialCapacity(CapacityFunction):
    """pi(i, a) = w_i * alpha(k*)^(a-1)."""

    def __init__(self, c: float):
        self.c = c
        self.name = f"w*alpha^(a-1),c={c}"

    def evaluate(self, w: float, a: int, k_star: int) -> float:
        return w * alpha(k_star, self.c) ** (a - 1)

    def evaluate_run(self, w: float, a: int, count: int, k_star: int) -> np.ndarray:
        return w * alpha(k_star, self.c) ** np.arange(a - 1, a - 1 - count, -1, dtype=float)

    def rho(self, k_star: int) -> float:
        return alpha(k_star, self.c)

    def __repr__(self) -> str:
        return f"ExponentialCapacity(c={self.c})"


class ConservativeCapacity(CapacityFunction):
    """pi(i, a) = 2^(-a/k) * w_i for equal processing times k."""

    name = "2^(-a/k)*w"

    def evaluate(self, w: float, a: int, k_star: int) -> float:
        return 2.0 ** (-a / max(k_star, 1)) * w

    def evaluate_run(self, w: float, a: int, count: int, k_star: int) -> np.ndarray:
        return np.power(2.0, -np.arange(a, a - count, -1, dtype=float) / max(k_star, 1)) * w

    def rho(self, k_star: int) -> float:
        return 2.0 ** (-1.0 / max(k_star, 1))


class UnitCapacity(CapacityFunction):
    """pi(i, a) = 1 / a, for unit weights."""

    name = "1/a"

    def evaluate(self, w: float, a: int, k_star: int) -> float:
        return 1.0 / a

    def evaluate_run(self, w: float, a: int, count: int, k_star: int) -> np.ndarray:
        return 1.0 / np.arange(a, a - count, -1, dtype=float)

    def rho(self, k_star: int) -> float:
        k = max(k_star, 1)
        return (k - 1) / k


# Exponential capacity analysis

def alpha(k: int, c: float) -> float:
    """alpha(k) = 1 - c^2 ln k / k, with k clamped to at least 2."""
    k = max(k, 2)
    return 1.0 - c * c * math.log(k) / k


def validity_function(x: float, k: int, c: float) -> float:
    """f(x) = x * alpha(k)^(x-1)."""
    return x * alpha(k, c) ** (x - 1)


def expcap_pivot(k: int, c: float) -> float:
    """k / (c^2 ln k): f grows up to this point and shrinks after it."""
    k = max(k, 2)
    return k / (c * c * math.log(k))


def expcap_conditions_hold(k: int, c: float, tol: Optional[float] = None) -> bool:
    """Brute force over integer x in [1, k]: f >= 1 up to the pivot and f >= ln k after it."""
    x = np.arange(1, k + 1, dtype=float)
    f = x * alpha(k, c) ** (x - 1)
    small = x <= expcap_pivot(k, c)
    eps = settings.float_tolerance if tol is None else tol
    return bool(np.all(f[small] >= 1.0 - eps) and np.all(f[~small] >= math.log(max(k, 2)) - eps))


def expcap_endpoint_holds(ks: np.ndarray, c: float) -> np.ndarray:
    """Vectorised form of the conditions using unimodality: only f(k) >= ln k can fail."""
    ks = np.asarray(ks, dtype=float)
    log_k = np.log(ks)
    alphas = 1.0 - c * c * log_k / ks
    f_k = ks * np.exp((ks - 1.0) * np.log(alphas))
    pivots = ks / (c * c * log_k)
    return (ks <= pivots) | (f_k >= log_k)


def expcap_threshold(c: float, k_max: int = 2 ** 22, chunk: int = 2 ** 18) -> Optional[int]:
    """Least k0 such that the conditions hold for every k in [k0, k_max], if any."""
    last_failure = 1
    for start in range(2, k_max + 1, chunk):
        ks = np.arange(start, min(start + chunk, k_max + 1))
        failures = ks[~expcap_endpoint_holds(ks, c)]
        if failures.size:
            last_failure = int(failures[-1])
    if last_failure == k_max:
        return None
    return last_failure + 1


def expcap_type3_exact_bound(k: int, c: float) -> float:
    """Largest type-3 total per unit of w_target allowed by the counting lemma at this k."""
    x = np.arange(1, k + 1, dtype=float)
    inverse = 1.0 / (x * alpha(k, c) ** (x - 1))
    # the m-th smallest charged job has p >= m + 1
    return float(sum(inverse[m:].max() for m in range(1, k)))


def expcap_claimed_ratio(k: int, c: float) -> float:
    """1 + k/(c^2 ln k) + (1 + 1/c^2) k / ln k."""
    k = max(k, 2)
    log_k = math.log(k)
    return 1.0 + k / (c * c * log_k) + (1.0 + 1.0 / (c * c)) * k / log_k


# Policies

class OnlinePolicy(ABC):
    """Deterministic slot policy: picks the pending job of largest priority."""

    name: str = "policy"
    capacity: Optional[CapacityFunction] = None
    # the running job keeps the argmax until the next release or its completion
    stable_choice: bool = False

    def bind(self, k: int, equal_lengths: bool) -> None:
        """Prepare for a run on instances with bound k."""
        self.k = k
        self.equal_lengths = equal_lengths

    @abstractmethod
    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        """Larger is preferred."""
        pass

    def choose(self, view: PendingView) -> Optional[int]:
        """Job id to run at view.t, or None to idle."""
        best: Optional[Tuple[float, int]] = None
        for entry in view.pending:
            key = (self.priority(entry.job, entry.remaining, view.k_star), -entry.job.id)
            if best is None or key > best:
                best = key
        return None if best is None else -best[1]

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name}>"


class SmithRatioPolicy(OnlinePolicy):
    """Largest w/p (`static`) or largest w/q (`remaining`); audited with pi = w/a."""

    stable_choice = True
    SELECTIONS = ("static", "remaining")

    def __init__(self, selection: str = "static"):
        if selection not in self.SELECTIONS:
            raise ConfigurationError(
                f"unknown Smith ratio selection '{selection}'",
                parameter="selection", value=selection
            )
        self.selection = selection
        self.capacity = SmithCapacity()
        self.name = "smith" if selection == "static" else "smith:remaining"

    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        if self.selection == "static":
            return job.w / job.p
        return job.w / remaining


class ExponentialCapacityPolicy(OnlinePolicy):
    """Largest w * alpha(k*)^(q-1), with k* the longest job released so far."""

    stable_choice = True

    def __init__(self, c: Optional[float] = None):
        c = settings.expcap_c if c is None else c
        if not 0.0 < c < 1.0:
            raise ConfigurationError("c must lie strictly between 0 and 1", parameter="c", value=c)
        self.c = c
        self.capacity = ExponentialCapacity(c)
        self.name = f"expcap:c={c}"

    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        return self.capacity.evaluate(job.w, remaining, k_star)


class ConservativePolicy(OnlinePolicy):
    """Largest 2^(-q/k) * w on equal-length instances."""

    name = "conservative"
    stable_choice = True

    def __init__(self):
        self.capacity = ConservativeCapacity()

    def bind(self, k: int, equal_lengths: bool) -> None:
        if not equal_lengths:
            raise ConfigurationError(
                "conservative policy requires an equal-length instance",
                parameter="equal_lengths", value=equal_lengths
            )
        super().bind(k, equal_lengths)

    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        return self.capacity.evaluate(job.w, remaining, self.k)


class SRPTPolicy(OnlinePolicy):
    """Smallest remaining processing time."""

    name = "srpt"
    stable_choice = True

    def __init__(self):
        self.capacity = UnitCapacity()

    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        return 1.0 / remaining


class EDFPolicy(OnlinePolicy):
    """Earliest deadline among pending jobs."""

    name = "edf"
    stable_choice = True

    def priority(self, job: Job, remaining: int, k_star: int) -> float:
        return -float(job.d)


def smith_ratio_policy(selection: str = "static") -> OnlinePolicy:
    return SmithRatioPolicy(selection)


def exponential_capacity_policy(c: Optional[float] = None) -> OnlinePolicy:
    return ExponentialCapacityPolicy(c)


def conservative_policy() -> OnlinePolicy:
    return ConservativePolicy()


def srpt_policy() -> OnlinePolicy:
    return SRPTPolicy()


def edf_policy() -> OnlinePolicy:
    return EDFPolicy()


POLICY_NAMES = ["smith", "smith:remaining", "expcap:c=<real>", "conservative", "srpt", "edf"]


def policy_from_name(spec: str) -> OnlinePolicy:
    """Build a policy from its CLI name, e.g. `smith`, `expcap:c=0.9`, `srpt`."""
    name, _, options = spec.strip().partition(":")
    name = name.lower()

    if name == "smith":
        return smith_ratio_policy(options or "static")
    if name == "expcap":
        c = None
        if options:
            key, _, value = options.partition("=")
            if key != "c":
                raise ConfigurationError(f"unknown expcap option '{key}'", parameter="policy", value=spec)
            try:
                c = float(value)
            except ValueError:
                raise ConfigurationError("expcap c must be a real number", parameter="c", value=value) from None
        return exponential_capacity_policy(c)
    if options:
        raise ConfigurationError(f"policy '{name}' takes no options", parameter="policy", value=spec)
    if name == "conservative":
        return conservative_policy()
    if name == "srpt":
        return srpt_policy()
    if name == "edf":
        return edf_policy()

    raise ConfigurationError(
        f"unknown policy '{spec}'; expected one of {', '.join(POLICY_NAMES)}",
        parameter="policy", value=spec
    )


# Offline EDF

def _edf_run(jobs: Iterable[Job], record: bool) -> Tuple[bool, List[Optional[Unit]], Dict[int, int]]:
    """Preemptive EDF over released, uncompleted jobs; reports whether every job met its deadline."""
    ordered = sorted(jobs, key=lambda job: (job.r, job.id))
    slots: List[Optional[Unit]] = []
    completions: Dict[int, int] = {}
    ready: List[Tuple[int, int, Job]] = []
    remaining: Dict[int, int] = {}
    index = 0
    t = 0

    while index < len(ordered) or ready:
        if not ready and ordered[index].r > t:
            if record:
                slots.extend([None] * (ordered[index].r - t))
            t = ordered[index].r
        while index < len(ordered) and ordered[index].r <= t:
            job = ordered[index]
            remaining[job.id] = job.p
            heappush(ready, (job.d, job.id, job))
            index += 1

        d, job_id, job = ready[0]
        if t >= d:
            return False, slots, completions

        # run the earliest deadline up to its completion, its deadline or the next release
        count = min(remaining[job_id], d - t)
        if index < len(ordered):
            count = min(count, ordered[index].r - t)
        if record:
            a = remaining[job_id]
            slots.extend(Unit(job=job_id, a=value) for value in range(a, a - count, -1))
        remaining[job_id] -= count
        t += count
        if remaining[job_id] == 0:
            heappop(ready)
            completions[job_id] = t

    return True, slots, completions


def edf_complete_schedule(jobs: Iterable[Job]) -> Optional[Trace]:
    """EDF schedule of the whole set if every job completes on time, else None."""
    feasible, slots, completions = _edf_run(jobs, record=True)
    if not feasible:
        return None
    return Trace(slots=slots, completions=completions)


def edf_feasible(jobs: Iterable[Job]) -> bool:
    """Preemptive single-machine feasibility of a job set."""
    return _edf_run(jobs, record=False)[0]


# Post-hoc trace checks

def _k_star_steps(instance: Instance) -> Tuple[List[int], List[int]]:
    """Distinct release times and the largest processing time released by each."""
    times: List[int] = []
    bounds: List[int] = []
    for job in sorted(instance.jobs, key=lambda job: job.r):
        bound = max(bounds[-1] if bounds else 0, job.p)
        if times and times[-1] == job.r:
            bounds[-1] = bound
        else:
            times.append(job.r)
            bounds.append(bound)
    return times, bounds


def run_rho(capacity: CapacityFunction, trace: Trace, instance: Instance) -> float:
    """Largest monotonicity constant in force over the slots of a run."""
    if trace.length == 0:
        return capacity.rho(instance.max_p)
    times, bounds = _k_star_steps(instance)
    k_stars = [0 if not times or times[0] > 0 else bounds[0]]
    k_stars.extend(bound for time, bound in zip(times, bounds) if 0 < time < trace.length)
    return max(capacity.rho(k_star) for k_star in k_stars)


def check_argmax(trace: Trace, instance: Instance, policy: OnlinePolicy) -> List[Violation]:
    """Every slot runs a job of maximal priority whenever something is pending."""
    violations: List[Violation] = []
    for start, end, view in replay_segments(trace, instance):
        pending = view.pending
        unit = trace.slots[start]
        if not pending:
            continue
        if unit is None:
            violations.extend(
                Violation(kind="argmax", slot=t, message="idle while jobs are pending")
                for t in range(start, end)
            )
            continue
        chosen = view.entry(unit.job)
        if chosen is None:
            violations.extend(
                Violation(kind="argmax", slot=t, job_id=unit.job, message="ran a job that was not released")
                for t in range(start, end)
            )
            continue

        rival = max(
            (policy.priority(entry.job, entry.remaining, view.k_star) for entry in pending if entry is not chosen),
            default=-math.inf
        )
        for t in range(start, end):
            value = policy.priority(chosen.job, chosen.remaining - (t - start), view.k_star)
            best = max(rival, value) if chosen.pending else rival
            if not approx_ge(value, best):
                violations.append(Violation(
                    kind="argmax", slot=t, job_id=unit.job, observed=value, limit=best,
                    message=f"ran job {unit.job} with priority {value} below the maximum {best}"
                ))
            elif policy.stable_choice:
                # the chosen priority only grows while the rest stay fixed
                break
    return violations


def _capacity_of(source: Union[CapacityFunction, OnlinePolicy]) -> CapacityFunction:
    if isinstance(source, CapacityFunction):
        return source
    if source.capacity is None:
        raise ConfigurationError(f"policy {source.name} has no capacity function", parameter="policy")
    return source.capacity


def _capacity_array(trace: Trace, instance: Instance, capacity: CapacityFunction) -> np.ndarray:
    times, bounds = _k_star_steps(instance)
    values = np.full(trace.length, -np.inf)
    for start, end, job_id, a in trace.segments():
        if job_id is None:
            continue
        w = instance.job(job_id).w
        t = start
        while t < end:
            index = bisect_right(times, t)
            k_star = bounds[index - 1] if index else 0
            stop = min(end, times[index]) if index < len(times) else end
            values[t:stop] = capacity.evaluate_run(w, a - (t - start), stop - t, k_star)
            t = stop
    return values


def slot_capacities(trace: Trace, instance: Instance,
                    capacity: Union[CapacityFunction, OnlinePolicy]) -> List[float]:
    """Capacity of the unit run at every slot, with k* as it stood at that slot; idle slots get -inf."""
    return _capacity_array(trace, instance, _capacity_of(capacity)).tolist()


def check_monotonicity(trace: Trace, instance: Instance,
                       capacity: Union[CapacityFunction, OnlinePolicy],
                       rho: Optional[float] = None) -> List[Violation]:
    """(i, a) at t with a > 1 and (i', a') at t+1 satisfy pi_t(i, a) <= rho * pi_{t+1}(i', a')."""
    capacity = _capacity_of(capacity)
    if rho is None:
        rho = run_rho(capacity, trace, instance)
    if trace.length < 2:
        return []

    busy = np.zeros(trace.length, dtype=bool)
    remaining = np.zeros(trace.length, dtype=np.int64)
    for start, end, job_id, a in trace.segments():
        if job_id is not None:
            busy[start:end] = True
            remaining[start:end] = np.arange(a, a - (end - start), -1)

    capacities = np.where(busy, _capacity_array(trace, instance, capacity), 0.0)
    before, after = capacities[:-1], rho * capacities[1:]
    checked = busy[:-1] & busy[1:] & (remaining[:-1] > 1)
    broken = np.flatnonzero(checked & ~approx_le_array(before, after))

    return [
        Violation(
            kind="monotonicity", slot=t, job_id=trace.slots[t].job,
            observed=float(before[t]), limit=float(after[t]),
            message=f"capacity {float(before[t])} at slot {t} exceeds rho * {float(capacities[t + 1])} at slot {t + 1}"
        )
        for t in broken.tolist()
    ]


def check_validity(trace: Trace, instance: Instance,
                   capacity: Union[CapacityFunction, OnlinePolicy]) -> List[Violation]:
    """Whenever job j is pending, the unit run has capacity at least w_j / p_j."""
    capacities = _capacity_array(trace, instance, _capacity_of(capacity))
    violations: List[Violation] = []
    for start, end, view in replay_segments(trace, instance):
        pending = view.pending
        if not pending:
            continue
        needed = max(entry.job.smith_ratio for entry in pending)
        busy = trace.slots[start] is not None
        if busy and approx_ge(float(capacities[start:end].min()), needed):
            continue
        for t in range(start, end):
            have = float(capacities[t])
            if not busy or not approx_ge(have, needed):
                violations.append(Violation(
                    kind="validity", slot=t, observed=None if have == -math.inf else have, limit=needed,
                    message=f"unit capacity {have} is below pending Smith ratio {needed}"
                ))
    return violations
