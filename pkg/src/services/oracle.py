"""
Exact offline optimum for desk-scale instances.

A job set can be completed on a single preemptive machine exactly when the
Earliest Deadline First schedule of the set meets every deadline, so the
optimum is the heaviest EDF-feasible subset. `offline_optimum` finds it by
branch and bound; `exhaustive_schedule_optimum` searches over slot assignments
directly and exists only to certify the first on tiny instances.
"""

from functools import lru_cache
from typing import List, Optional, Tuple

from src.config import settings
from src.models.domain import Instance, Job
from src.models.experiment import OptimumResult
from src.services.policies import edf_complete_schedule, edf_feasible
from src.utils.exceptions import BudgetExceededError
from src.utils.logging import logger
from src.utils.numeric import approx_eq


def offline_optimum(instance: Instance, budget: Optional[int] = None) -> OptimumResult:
    """Heaviest feasible subset; ties go to the lexicographically smallest id set."""
    budget = settings.oracle_budget if budget is None else budget

    if len(instance) > budget:
        raise BudgetExceededError(
            f"instance has {len(instance)} jobs, oracle budget is {budget}",
            budget=budget, size=len(instance)
        )

    # a job that cannot finish alone belongs to no feasible set
    candidates = [job for job in instance.jobs if job.feasible]

    order = sorted(candidates, key=lambda job: (-job.w, job.id))
    suffix = [0.0] * (len(order) + 1)
    for index in range(len(order) - 1, -1, -1):
        suffix[index] = suffix[index + 1] + order[index].w

    best_gain = 0.0
    best_ids: Tuple[int, ...] = ()
    nodes = 0

    def better(gain: float, ids: Tuple[int, ...]) -> bool:
        if approx_eq(gain, best_gain):
            return ids < best_ids
        return gain > best_gain

    def search(index: int, chosen: List[Job], gain: float) -> None:
        nonlocal best_gain, best_ids, nodes
        nodes += 1

        if index == len(order):
            ids = tuple(sorted(job.id for job in chosen))
            if better(gain, ids):
                best_gain, best_ids = gain, ids
            return

        # equal bounds are kept alive for the id tie-break
        upper = gain + suffix[index]
        if upper < best_gain and not approx_eq(upper, best_gain):
            return

        job = order[index]
        extended = chosen + [job]
        if edf_feasible(extended):
            search(index + 1, extended, gain + job.w)
        search(index + 1, chosen, gain)

    search(0, [], 0.0)

    subset = instance.subset(best_ids)
    witness = edf_complete_schedule(subset.jobs)
    assert witness is not None

    logger.debug(
        "Offline optimum found",
        extra={"job_count": len(instance), "gain": best_gain, "subset": list(best_ids), "nodes": nodes}
    )
    return OptimumResult(subset=list(best_ids), gain=float(sum(job.w for job in subset.jobs)), witness=witness)


def exhaustive_schedule_optimum(instance: Instance, horizon: Optional[int] = None,
                                max_jobs: Optional[int] = None,
                                max_horizon: Optional[int] = None) -> float:
    """Best completed weight over every assignment of slots [0, horizon) to jobs or idle."""
    max_jobs = settings.exhaustive_max_jobs if max_jobs is None else max_jobs
    max_horizon = settings.exhaustive_max_horizon if max_horizon is None else max_horizon
    horizon = instance.horizon if horizon is None else horizon

    if len(instance) > max_jobs:
        raise BudgetExceededError(
            f"exhaustive search allows at most {max_jobs} jobs, got {len(instance)}",
            budget=max_jobs, size=len(instance)
        )
    if horizon > max_horizon:
        raise BudgetExceededError(
            f"exhaustive search allows a horizon of at most {max_horizon}, got {horizon}",
            budget=max_horizon, size=horizon
        )

    jobs = instance.jobs

    # state: slot and remaining time of every job; completing at t+1 <= d is implied by t < d
    @lru_cache(maxsize=None)
    def best(t: int, remaining: Tuple[int, ...]) -> float:
        if t == horizon:
            return 0.0
        value = best(t + 1, remaining)
        for index, job in enumerate(jobs):
            if remaining[index] > 0 and job.r <= t < job.d:
                after = remaining[:index] + (remaining[index] - 1,) + remaining[index + 1:]
                earned = job.w if after[index] == 0 else 0.0
                value = max(value, earned + best(t + 1, after))
        return value

    return best(0, tuple(job.p for job in jobs))
