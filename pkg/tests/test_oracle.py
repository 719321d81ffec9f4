"""
Oracle tests: the heaviest feasible subset and its certification by
exhaustive slot assignment.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.models.domain import Instance, Job, Trace, Unit
from src.services.oracle import exhaustive_schedule_optimum, offline_optimum
from src.services.simulator import validate_trace
from src.utils.exceptions import BudgetExceededError
from tests.conftest import instances


def small_instance(seed: int) -> Instance:
    """At most four jobs with integer weights and deadlines within eight slots."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 5))
    jobs = []
    for job_id in range(n):
        r = int(rng.integers(0, 7))
        d = min(r + int(rng.integers(1, 5)), 8)
        jobs.append(Job(id=job_id, r=r, p=int(rng.integers(1, 4)), d=d, w=float(rng.integers(1, 6))))
    return Instance(jobs=jobs, k=3)


class TestOfflineOptimum:
    """Test the branch and bound search."""

    def test_two_job_instance(self, smith_two_job):
        result = offline_optimum(smith_two_job)

        assert result.subset == [0, 1]
        assert result.gain == pytest.approx(5.01)
        assert result.witness.slots == [Unit(job=0, a=4), Unit(job=0, a=3), Unit(job=0, a=2),
                                         Unit(job=0, a=1), Unit(job=1, a=1)]

    def test_infeasible_job(self):
        result = offline_optimum(Instance(jobs=[Job(id=0, r=0, p=3, d=2, w=1.0)], k=3))

        assert result.subset == []
        assert result.gain == 0.0
        assert result.witness == Trace()

    def test_tie_goes_to_smallest_ids(self):
        """Two identical tight jobs, only one fits."""
        instance = Instance(
            jobs=[Job(id=0, r=0, p=2, d=2, w=1.0), Job(id=1, r=0, p=2, d=2, w=1.0)],
            k=2
        )
        result = offline_optimum(instance)

        assert result.subset == [0]
        assert result.gain == 1.0

    def test_preemption_needed(self, preemption_instance):
        result = offline_optimum(preemption_instance)

        assert result.subset == [0, 1]
        assert result.witness.completions == {1: 2, 0: 3}

    def test_budget(self):
        instance = Instance(jobs=[Job(id=i, r=0, p=1, d=5, w=1.0) for i in range(3)], k=1)

        with pytest.raises(BudgetExceededError) as exc_info:
            offline_optimum(instance, budget=2)
        assert exc_info.value.details["requested_size"] == 3

    def test_budget_counts_infeasible_jobs(self):
        """The budget bounds the whole instance, not just the jobs that can finish alone."""
        jobs = [Job(id=0, r=0, p=1, d=1, w=1.0)] + [Job(id=i, r=0, p=2, d=1, w=1.0) for i in range(1, 4)]

        with pytest.raises(BudgetExceededError) as exc_info:
            offline_optimum(Instance(jobs=jobs, k=2), budget=1)
        assert exc_info.value.details["requested_size"] == 4

    def test_infeasible_jobs_are_never_chosen(self):
        jobs = [Job(id=0, r=0, p=1, d=1, w=1.0)] + [Job(id=i, r=0, p=2, d=1, w=1.0) for i in range(1, 4)]
        result = offline_optimum(Instance(jobs=jobs, k=2), budget=4)
        assert result.subset == [0]

    @given(instance=instances(max_jobs=6, max_k=3))
    @settings(max_examples=80, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_witness_completes_subset(self, instance):
        result = offline_optimum(instance)

        assert validate_trace(result.witness, instance) == []
        assert sorted(result.witness.completions) == result.subset
        assert all(result.witness.completions[i] <= instance.job(i).d for i in result.subset)
        assert result.gain == sum(instance.job(i).w for i in result.subset)

    @given(instance=instances(max_jobs=5, max_k=3), data=st.data())
    @settings(max_examples=80, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_adding_a_job_never_hurts(self, instance, data):
        r = data.draw(st.integers(min_value=0, max_value=5))
        p = data.draw(st.integers(min_value=1, max_value=instance.k))
        d = r + data.draw(st.integers(min_value=1, max_value=5))
        extra = Job(id=len(instance), r=r, p=p, d=d, w=float(data.draw(st.integers(min_value=1, max_value=9))))

        assert offline_optimum(instance.with_job(extra)).gain >= offline_optimum(instance).gain


class TestExhaustiveOptimum:
    """Test the slot-assignment search."""

    def test_examples(self, preemption_instance):
        assert exhaustive_schedule_optimum(preemption_instance) == 2.0
        assert exhaustive_schedule_optimum(Instance(jobs=[Job(id=0, r=1, p=2, d=4, w=3.5)], k=2)) == 3.5
        assert exhaustive_schedule_optimum(Instance(k=1)) == 0.0

    def test_budgets(self):
        many = Instance(jobs=[Job(id=i, r=0, p=1, d=2, w=1.0) for i in range(5)], k=1)
        late = Instance(jobs=[Job(id=0, r=0, p=1, d=11, w=1.0)], k=1)

        with pytest.raises(BudgetExceededError):
            exhaustive_schedule_optimum(many)
        with pytest.raises(BudgetExceededError):
            exhaustive_schedule_optimum(late)

    def test_agrees_with_branch_and_bound(self):
        """Exact agreement on 2000 seeded instances."""
        for seed in range(2000):
            instance = small_instance(seed)
            assert offline_optimum(instance).gain == exhaustive_schedule_optimum(instance), seed
