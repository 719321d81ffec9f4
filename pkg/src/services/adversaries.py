"""
Adaptive lower-bound adversaries.

Each construction watches the policy slot by slot through a `Simulation` and
decides what to release next. The run records the transcript, both gains and
the adversary's own schedule, and checks the guarantees the construction makes
on the transcript it actually produced.
"""

import math
from functools import lru_cache
from typing import List, Optional, Tuple

from src.config import settings
from src.models.domain import Instance, Job
from src.models.experiment import AdversaryRun, AdversaryStep, WeightSequence
from src.services.oracle import offline_optimum
from src.services.policies import OnlinePolicy, edf_complete_schedule, edf_feasible
from src.services.simulator import Simulation
from src.utils.exceptions import ConstructionError, DomainError, PrecisionExhaustedError
from src.utils.logging import log_adversary_run, logger
from src.utils.numeric import Arithmetic, approx_ge

EQUAL_LENGTH_LIMIT = 1.5 * math.sqrt(3.0)
K_OVER_LNK_SLACK = 0.06


class _Game:
    """A simulation plus the transcript of what was released and run at each slot."""

    def __init__(self, policy: OnlinePolicy, k: int, equal_lengths: bool = False):
        self.simulation = Simulation(policy, k, equal_lengths)
        self.steps: List[AdversaryStep] = []
        self._released: List[Job] = []

    @property
    def t(self) -> int:
        return self.simulation.t

    def release(self, *jobs: Job) -> None:
        for job in jobs:
            self.simulation.release(job)
            self._released.append(job)

    def step(self) -> Optional[int]:
        t = self.simulation.t
        unit = self.simulation.step()
        action = unit.job if unit is not None else None
        self.steps.append(AdversaryStep(t=t, released=self._released, action=action))
        self._released = []
        return action

    def run_until(self, t: int) -> None:
        while self.simulation.t < t:
            self.step()

    def drain(self) -> None:
        """Let the policy finish whatever is still pending."""
        while self.simulation.has_pending():
            self.step()

    def ran_only(self, job_id: int, start: int, end: int) -> bool:
        """True when every busy slot in [start, end) ran `job_id`; idle slots qualify."""
        return all(
            step.action is None or step.action == job_id
            for step in self.steps[start:end]
        )


def _finish(game: _Game, construction: str, policy: OnlinePolicy, k: int, equal_lengths: bool,
            adversary_ids: List[int], adversary_gain: float, **kwargs) -> AdversaryRun:
    simulation = game.simulation
    if game._released:
        game.step()
    jobs = sorted(simulation.released, key=lambda job: job.id)
    instance = Instance(jobs=jobs, k=k, equal_lengths=equal_lengths)
    chosen = instance.subset(adversary_ids)

    run = AdversaryRun(
        construction=construction,
        policy=policy.name,
        k=k,
        steps=game.steps,
        instance=instance,
        trace=simulation.trace(),
        algorithm_gain=simulation.gain(),
        adversary_gain=adversary_gain,
        adversary_schedule=edf_complete_schedule(chosen.jobs),
        adversary_completed=sorted(adversary_ids),
        **kwargs
    )
    log_adversary_run(construction, len(run.steps), run.forced_ratio, policy=policy.name, k=k)
    return run


# Equal processing times: the 3*sqrt(3)/2 game

def cubic_discriminant(R: float) -> float:
    """Discriminant of g^3 - R g^2 + R, i.e. 4 R^2 (R^2 - 27/4)."""
    return 4.0 * R * R * (R * R - 27.0 / 4.0)


def cubic_root_check(R: float, tol: float = 1e-12) -> float:
    """The single real root of g^3 - R g^2 + R, bracketed in (-1, 0)."""
    if not 0.0 < R < EQUAL_LENGTH_LIMIT:
        raise DomainError(
            f"R must lie in (0, 3*sqrt(3)/2), got {R}; the cubic has three real roots there",
            parameter="R", value=R
        )
    discriminant = cubic_discriminant(R)
    if discriminant >= 0:
        raise DomainError(f"discriminant {discriminant} is not negative", parameter="R", value=R)

    def cubic(g: float) -> float:
        return g ** 3 - R * g * g + R

    low, high = -1.0, 0.0
    assert cubic(low) < 0 < cubic(high)
    while high - low > tol:
        middle = (low + high) / 2.0
        if cubic(middle) < 0:
            low = middle
        else:
            high = middle
    return (low + high) / 2.0


def weight_sequence(R: float, max_steps: Optional[int] = None,
                    precision_bits: Optional[int] = None) -> WeightSequence:
    """
    Weights x_t of the equal-length game and the sequences derived from them.

    X_{t+1} = R (X_t - X_{t-2}) with X_{-2} = X_{-1} = 0 and X_0 = 1, and
    x_t = X_t - X_{t-2}. Generation stops at the first non-positive x (index i0)
    or after max_steps weights.
    """
    max_steps = settings.adversary_max_steps if max_steps is None else max_steps
    arithmetic = Arithmetic(precision_bits)
    zero, one = arithmetic.number(0), arithmetic.number(1)
    ratio = arithmetic.number(R)

    # X[t + 2] holds X_t
    X = [zero, zero, one]
    x = [one]
    i0: Optional[int] = None
    while len(x) <= max_steps:
        t = len(x)
        X.append(arithmetic.mul(ratio, arithmetic.sub(X[t + 1], X[t - 1])))
        x.append(arithmetic.sub(X[t + 2], X[t]))
        if not math.isfinite(float(X[-1])):
            break
        if x[-1] <= 0:
            i0 = t
            break

    X_values = X[2:]
    s_from_X = [
        arithmetic.mul(ratio, arithmetic.sub(one, arithmetic.div(X[i + 1], X[i + 3])))
        for i in range(len(X_values) - 1)
    ]

    s: List = []
    for i in range(len(s_from_X)):
        if i == 0:
            s.append(ratio)
        elif i == 1:
            s.append(arithmetic.sub(ratio, arithmetic.div(one, ratio)))
        else:
            product = arithmetic.mul(s[i - 1], s[i - 2])
            if product == 0:
                break
            s.append(arithmetic.mul(ratio, arithmetic.sub(one, arithmetic.div(one, product))))

    return WeightSequence(
        R=R,
        x=[float(value) for value in x],
        X=[float(value) for value in X_values],
        s=[float(value) for value in s],
        s_from_X=[float(value) for value in s_from_X],
        i0=i0,
        precision_bits=arithmetic.precision_bits
    )


def equal_length_adversary(R: float, k: int, policy: OnlinePolicy, max_steps: Optional[int] = None,
                           precision_bits: Optional[int] = None) -> AdversaryRun:
    """
    Tight jobs of length k released every k-1 slots with weights x_0, x_1, ...

    Releases stop once the policy has completed a job or the next weight is not
    positive. The adversary then runs every other released job backwards from the
    last one, earning max(X_M, X_{M-1}) for the last released index M.
    """
    if not 0.0 < R < EQUAL_LENGTH_LIMIT:
        raise DomainError(f"R must lie in (0, 3*sqrt(3)/2), got {R}", parameter="R", value=R)
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}", parameter="k", value=k)
    max_steps = settings.adversary_max_steps if max_steps is None else max_steps

    sequence = weight_sequence(R, max_steps, precision_bits)
    game = _Game(policy, k, equal_lengths=True)
    simulation = game.simulation
    cadence = k - 1

    last = -1
    for index in range(max_steps + 1):
        game.run_until(index * cadence)
        if simulation.completions:
            break
        if sequence.i0 is not None and index >= sequence.i0:
            break
        if index >= len(sequence.x):
            raise PrecisionExhaustedError(
                f"weight sequence for R={R} did not turn non-positive in {len(sequence.x)} steps; "
                "raise the precision or max_steps",
                steps=len(sequence.x), precision_bits=sequence.precision_bits
            )
        r = index * cadence
        game.release(Job(id=index, r=r, p=k, d=r + k, w=sequence.x[index]))
        last = index
    else:
        raise PrecisionExhaustedError(
            f"neither the policy nor the weight sequence ended the game within {max_steps} steps",
            steps=max_steps, precision_bits=sequence.precision_bits
        )

    game.drain()

    newest = sequence.X[last]
    older = sequence.X[last - 1] if last >= 1 else 0.0
    start = last if newest >= older else last - 1
    adversary_ids = list(range(start, -1, -2))
    adversary_gain = max(newest, older)

    run = _finish(
        game, "equal-length", policy, k, True, adversary_ids, adversary_gain,
        parameters={"R": R, "released": float(last + 1)},
        sequence=sequence
    )
    if run.algorithm_gain > 0 and not approx_ge(run.forced_ratio, R):
        raise ConstructionError(
            f"equal-length game forced only {run.forced_ratio} against {policy.name}, below R={R}",
            violations=[f"ratio {run.forced_ratio} < {R}"]
        )
    return run


# Unit weights: the log k / log log k construction

@lru_cache(maxsize=None)
def span(level: int, e: int) -> int:
    """Length of the window an instance I(level, s, e) occupies."""
    if level < 1 or e < 0:
        raise DomainError(f"span needs level >= 1 and e >= 0, got ({level}, {e})", parameter="level", value=level)
    if level == 1:
        return e + 1
    b = span(level - 1, 0)
    a = max(e, b)
    return a + b + span(level - 1, a)


def span_closed_form(level: int, e: int) -> int:
    return level * max(math.factorial(level), math.factorial(level - 1) + e)


def depth_for_k(k: int) -> int:
    """Deepest level whose jobs fit under the bound k: floor(ln k / ln ln k) - 1."""
    if k < 16:
        raise DomainError(f"depth is defined for k >= 16, got {k}", parameter="k", value=k)
    return math.floor(math.log(k) / math.log(math.log(k))) - 1


def log_over_loglog_adversary(level: int, policy: OnlinePolicy) -> AdversaryRun:
    """
    Play I(level, 0, 0) with unit weights against the policy.

    I(1, s, e) is one tight job of length e + 1 released at s. For deeper levels,
    with b = span(level-1, 0), a = max(e, b) and c = span(level-1, a), release A
    (length a+c, deadline s+a+b+c) and a tight B (length a+b) at s. If only B ran
    in [s, s+a), continue with I(level-1, s+a, 0); otherwise with
    I(level-1, s+a+b, a).
    """
    if level < 1:
        raise DomainError(f"level must be at least 1, got {level}", parameter="level", value=level)

    k = math.factorial(level + 1)
    game = _Game(policy, k)
    next_id = 0

    def new_job(r: int, p: int, d: int) -> Job:
        nonlocal next_id
        job = Job(id=next_id, r=r, p=p, d=d, w=1.0)
        next_id += 1
        return job

    def play(depth: int, s: int, e: int) -> List[int]:
        game.run_until(s)
        if depth == 1:
            job = new_job(s, e + 1, s + e + 1)
            game.release(job)
            return [job.id]

        b = span(depth - 1, 0)
        a = max(e, b)
        c = span(depth - 1, a)
        job_a = new_job(s, a + c, s + a + b + c)
        job_b = new_job(s, a + b, s + a + b)
        game.release(job_a, job_b)

        game.run_until(s + a)
        if game.ran_only(job_b.id, s, s + a):
            return [job_a.id] + play(depth - 1, s + a, 0)
        return [job_b.id] + play(depth - 1, s + a + b, a)

    adversary_ids = play(level, 0, 0)
    game.drain()
    game_jobs = sorted(game.simulation.released, key=lambda job: job.id)
    optimum = offline_optimum(Instance(jobs=game_jobs, k=k))

    run = _finish(
        game, "log-over-loglog", policy, k, False, adversary_ids, optimum.gain,
        parameters={"level": float(level), "span": float(span(level, 0))}
    )

    problems = []
    if run.algorithm_completions > 1:
        problems.append(f"policy completed {run.algorithm_completions} jobs")
    if len(adversary_ids) != level or not edf_feasible(run.instance.subset(adversary_ids).jobs):
        problems.append(f"adversary schedule {adversary_ids} does not complete {level} jobs")
    if any(job.r < 0 or job.d > span(level, 0) for job in run.instance.jobs):
        problems.append(f"a job leaves the window [0, {span(level, 0)})")
    if run.instance.max_p > k:
        problems.append(f"processing time {run.instance.max_p} exceeds {k}")
    if problems:
        raise ConstructionError(
            f"log-over-loglog construction failed against {policy.name}",
            violations=problems
        )
    return run


# Bounded processing times: the k / ln k game

def slack_function(R: float, r: int) -> float:
    """r - R e^(r/R - 1); never positive when R - r lies in (0, 1]."""
    return r - R * math.exp(r / R - 1.0)


def k_over_lnk_weight(t: int, R: float) -> float:
    """Weight of the unit job A_t."""
    return 1.0 if t < R else math.exp(t / R - 1.0)


def k_over_lnk_parameters(k: int) -> Tuple[float, int]:
    """R = k / ln k and r = ceil(R) - 1."""
    R = k / math.log(k)
    return R, math.ceil(R) - 1


def k_over_lnk_adversary(k: int, policy: OnlinePolicy) -> AdversaryRun:
    """
    Big job B (weight R, length k, deadline k) plus tight unit jobs A_1, A_2, ...

    A_{t+1} is released at t as long as only B ran in [0, t). The adversary takes
    either B alone or every released A, whichever weighs more.
    """
    if k < 16:
        raise DomainError(f"k must be at least 16, got {k}", parameter="k", value=k)

    R, r = k_over_lnk_parameters(k)
    game = _Game(policy, k)
    big = Job(id=0, r=0, p=k, d=k, w=R)
    small: List[Job] = []

    for t in range(k):
        game.run_until(t)
        if t == 0 or game.ran_only(big.id, 0, t):
            job = Job(id=t + 1, r=t, p=1, d=t + 1, w=k_over_lnk_weight(t + 1, R))
            small.append(job)
            if t == 0:
                game.release(big)
            game.release(job)
        else:
            break
    game.drain()

    small_gain = math.fsum(job.w for job in small)
    if small_gain > R:
        adversary_ids, adversary_gain = [job.id for job in small], small_gain
    else:
        adversary_ids, adversary_gain = [big.id], R

    run = _finish(
        game, "k-over-lnk", policy, k, False, adversary_ids, adversary_gain,
        parameters={"R": R, "r": float(r), "slack": slack_function(R, r)}
    )
    target = R - K_OVER_LNK_SLACK
    if run.algorithm_gain > 0 and not approx_ge(run.forced_ratio, target):
        raise ConstructionError(
            f"k/ln k game forced only {run.forced_ratio} against {policy.name}, below {target}",
            violations=[f"ratio {run.forced_ratio} < {target}"]
        )
    logger.debug("k/ln k game finished", extra={"k": k, "R": R, "released": len(small)})
    return run
