"""
Policy tests: selection rules, capacity functions, post-hoc trace checks and
the exponential capacity analysis helpers.
"""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from src.models.domain import Instance, Job, PendingEntry, PendingView, Trace, Unit
from src.services.policies import (
    ConservativeCapacity,
    ConservativePolicy,
    EDFPolicy,
    ExponentialCapacity,
    ExponentialCapacityPolicy,
    SRPTPolicy,
    SmithCapacity,
    SmithRatioPolicy,
    UnitCapacity,
    alpha,
    check_argmax,
    check_monotonicity,
    check_validity,
    edf_complete_schedule,
    edf_feasible,
    expcap_claimed_ratio,
    expcap_conditions_hold,
    expcap_endpoint_holds,
    expcap_pivot,
    expcap_threshold,
    expcap_type3_exact_bound,
    policy_from_name,
    run_rho,
    slot_capacities,
    validity_function,
)
from src.services.simulator import replay_views, simulate
from src.utils.exceptions import ConfigurationError
from src.utils.numeric import approx_ge, approx_le
from tests.conftest import instances, instances_with_traces

C = 0.9


def view_of(t: int, *entries) -> PendingView:
    """Pending view from (job, remaining) pairs."""
    return PendingView(
        t=t,
        k_star=max((job.p for job, _ in entries), default=0),
        entries=[PendingEntry(job=job, remaining=q, pending=t + q <= job.d) for job, q in entries]
    )


class TestPolicyFromName:
    """Test the policy name parser."""

    @pytest.mark.parametrize("spec,cls,name", [
        ("smith", SmithRatioPolicy, "smith"),
        ("smith:remaining", SmithRatioPolicy, "smith:remaining"),
        ("expcap:c=0.5", ExponentialCapacityPolicy, "expcap:c=0.5"),
        ("expcap", ExponentialCapacityPolicy, "expcap:c=0.9"),
        ("conservative", ConservativePolicy, "conservative"),
        (" SRPT ", SRPTPolicy, "srpt"),
        ("edf", EDFPolicy, "edf"),
    ])
    def test_known_policies(self, spec, cls, name):
        policy = policy_from_name(spec)
        assert isinstance(policy, cls)
        assert policy.name == name

    @pytest.mark.parametrize("spec", [
        "fifo", "smith:dynamic", "expcap:c=1.5", "expcap:c=zero", "expcap:d=0.5", "srpt:fast",
    ])
    def test_invalid_names(self, spec):
        with pytest.raises(ConfigurationError):
            policy_from_name(spec)

    def test_conservative_needs_equal_lengths(self):
        with pytest.raises(ConfigurationError):
            ConservativePolicy().bind(3, equal_lengths=False)


class TestSelection:
    """Test which pending job each rule picks."""

    def test_smith_static_vs_remaining(self):
        """Static uses w/p, remaining uses w/q."""
        long_job = Job(id=0, r=0, p=4, d=9, w=4.0)
        short_job = Job(id=1, r=0, p=1, d=9, w=1.5)
        view = view_of(0, (long_job, 1), (short_job, 1))

        assert policy_from_name("smith").choose(view) == 1
        assert policy_from_name("smith:remaining").choose(view) == 0

    def test_srpt_and_edf(self):
        early = Job(id=0, r=0, p=3, d=3, w=1.0)
        short = Job(id=1, r=0, p=1, d=8, w=1.0)
        view = view_of(0, (early, 3), (short, 1))

        assert policy_from_name("srpt").choose(view) == 1
        assert policy_from_name("edf").choose(view) == 0

    def test_expcap_prefers_nearly_done_heavy_work(self):
        policy = policy_from_name("expcap:c=0.9")
        heavy = Job(id=0, r=0, p=4, d=4, w=3.0)
        light = Job(id=1, r=0, p=1, d=4, w=1.0)

        # 3 * alpha(4)^3 ~ 1.12 > 1
        assert policy.choose(view_of(0, (heavy, 4), (light, 1))) == 0

    def test_conservative_priority(self):
        policy = ConservativePolicy()
        policy.bind(2, equal_lengths=True)
        job = Job(id=0, r=0, p=2, d=5, w=4.0)

        assert policy.priority(job, 2, 2) == pytest.approx(2.0)
        assert policy.priority(job, 1, 2) == pytest.approx(4.0 / math.sqrt(2.0))

    def test_nothing_pending(self):
        job = Job(id=0, r=0, p=2, d=2, w=1.0)
        assert policy_from_name("srpt").choose(view_of(1, (job, 2))) is None


class TestCapacities:
    """Test capacity values and monotonicity constants."""

    def test_values(self):
        assert SmithCapacity().evaluate(3.0, 2, 5) == 1.5
        assert SmithCapacity().rho(4) == 0.75
        assert policy_from_name("expcap:c=0.9").capacity.evaluate(2.0, 1, 16) == 2.0
        assert policy_from_name("expcap:c=0.9").capacity.rho(16) == pytest.approx(alpha(16, C))
        assert policy_from_name("srpt").capacity.evaluate(7.0, 4, 4) == 0.25
        assert ConservativePolicy().capacity.rho(2) == pytest.approx(2 ** -0.5)
        assert EDFPolicy().capacity is None

    def test_run_rho_uses_largest_bound_seen(self, smith_two_job):
        trace = simulate(smith_two_job, policy_from_name("smith:remaining"))
        assert run_rho(SmithCapacity(), trace, smith_two_job) == 0.75

    def test_slot_capacities(self, preemption_instance):
        trace = Trace(slots=[Unit(job=0, a=2), None, Unit(job=0, a=1)], completions={0: 3})
        values = slot_capacities(trace, preemption_instance, SmithCapacity())
        assert values == [0.5, -math.inf, 1.0]


class TestTraceChecks:
    """Test argmax, monotonicity and validity on concrete traces."""

    def test_argmax_accepts_own_trace(self, smith_two_job):
        for name in ("smith", "smith:remaining", "srpt", "edf", "expcap:c=0.9"):
            policy = policy_from_name(name)
            assert check_argmax(simulate(smith_two_job, policy), smith_two_job, policy) == []

    def test_argmax_flags_wrong_choice(self, smith_two_job):
        """Running a first contradicts static Smith."""
        trace = Trace(slots=[Unit(job=0, a=4)])
        violations = check_argmax(trace, smith_two_job, policy_from_name("smith"))

        assert len(violations) == 1
        assert violations[0].kind == "argmax"
        assert violations[0].slot == 0

    def test_argmax_flags_idling(self, single_job):
        violations = check_argmax(Trace(slots=[None]), single_job, policy_from_name("srpt"))
        assert [v.message for v in violations] == ["idle while jobs are pending"]

    def test_monotonicity_break(self):
        """Dropping from capacity 1 to 1/4 while a unit is unfinished breaks rho-monotonicity."""
        instance = Instance(
            jobs=[Job(id=0, r=0, p=2, d=9, w=2.0), Job(id=1, r=0, p=4, d=9, w=1.0)],
            k=4
        )
        trace = Trace(slots=[Unit(job=0, a=2), Unit(job=1, a=4)])
        violations = check_monotonicity(trace, instance, SmithCapacity())

        assert len(violations) == 1
        assert violations[0].slot == 0

    def test_static_smith_can_break_monotonicity(self):
        """A released short job preempts the long one; static Smith does not raise w/a."""
        instance = Instance(
            jobs=[Job(id=0, r=0, p=2, d=5, w=2.0), Job(id=1, r=1, p=1, d=5, w=1.5)],
            k=2
        )
        policy = policy_from_name("smith")
        trace = simulate(instance, policy)

        assert trace.slots[:2] == [Unit(job=0, a=2), Unit(job=1, a=1)]
        assert check_monotonicity(trace, instance, policy) != []

    def test_validity_flags_low_capacity(self):
        instance = Instance(
            jobs=[Job(id=0, r=0, p=1, d=3, w=5.0), Job(id=1, r=0, p=1, d=3, w=1.0)],
            k=1
        )
        trace = Trace(slots=[Unit(job=1, a=1), Unit(job=0, a=1)], completions={1: 1, 0: 2})
        violations = check_validity(trace, instance, SmithCapacity())

        assert [v.slot for v in violations] == [0]

    @given(instance=instances(max_k=4))
    @settings(max_examples=80, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_remaining_smith_is_monotone_and_valid(self, instance):
        """Argmax of w/q satisfies both audit preconditions on every instance."""
        policy = policy_from_name("smith:remaining")
        trace = simulate(instance, policy)

        assert check_monotonicity(trace, instance, policy) == []
        assert check_validity(trace, instance, policy) == []

    @given(instance=instances(max_k=4))
    @settings(max_examples=80, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_expcap_is_monotone_and_valid(self, instance):
        policy = policy_from_name("expcap:c=0.9")
        trace = simulate(instance, policy)

        assert check_monotonicity(trace, instance, policy) == []
        assert check_validity(trace, instance, policy) == []

    @given(instance=instances(max_k=4))
    @settings(max_examples=80, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_srpt_is_monotone_and_valid_on_unit_weights(self, instance):
        unit = Instance(
            jobs=[job.model_copy(update={"w": 1.0}) for job in instance.jobs],
            k=instance.k
        )
        policy = policy_from_name("srpt")
        trace = simulate(unit, policy)

        assert check_monotonicity(trace, unit, policy) == []
        assert check_validity(trace, unit, policy) == []

    @given(instance=instances(max_k=3, equal_lengths=True))
    @settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_conservative_is_monotone(self, instance):
        policy = policy_from_name("conservative")
        trace = simulate(instance, policy)
        assert check_monotonicity(trace, instance, policy) == []


def slotwise_argmax(trace, instance, policy):
    """Slots where the unit run is not of maximal priority, judged one slot at a time."""
    flagged = []
    for t, view in replay_views(trace, instance):
        unit = trace.slots[t]
        if not view.pending:
            continue
        chosen = view.entry(unit.job) if unit is not None else None
        if chosen is None:
            flagged.append(t)
            continue
        best = max(policy.priority(entry.job, entry.remaining, view.k_star) for entry in view.pending)
        if not approx_ge(policy.priority(chosen.job, chosen.remaining, view.k_star), best):
            flagged.append(t)
    return flagged


def slotwise_validity(trace, instance, capacity):
    flagged = []
    for t, view in replay_views(trace, instance):
        unit = trace.slots[t]
        if not view.pending:
            continue
        needed = max(entry.job.smith_ratio for entry in view.pending)
        if unit is None or not approx_ge(capacity.evaluate(instance.job(unit.job).w, unit.a, view.k_star), needed):
            flagged.append(t)
    return flagged


def slotwise_monotonicity(trace, instance, capacity, rho):
    k_stars = {t: view.k_star for t, view in replay_views(trace, instance)}
    flagged = []
    for t in range(trace.length - 1):
        unit, following = trace.slots[t], trace.slots[t + 1]
        if unit is None or following is None or unit.a <= 1:
            continue
        before = capacity.evaluate(instance.job(unit.job).w, unit.a, k_stars[t])
        after = rho * capacity.evaluate(instance.job(following.job).w, following.a, k_stars[t + 1])
        if not approx_le(before, after):
            flagged.append(t)
    return flagged


class TestEventDrivenChecks:
    """Stretch-wise checks agree with slot-by-slot evaluation and scale with k."""

    @pytest.mark.parametrize("capacity", [
        SmithCapacity(), ExponentialCapacity(C), ConservativeCapacity(), UnitCapacity()
    ], ids=repr)
    def test_evaluate_run(self, capacity):
        values = capacity.evaluate_run(3.0, 6, 4, 6)
        assert values.tolist() == pytest.approx([capacity.evaluate(3.0, a, 6) for a in (6, 5, 4, 3)], rel=1e-12)

    def test_capacities_follow_k_star_inside_a_run(self):
        """A release during a run changes alpha(k*) for the rest of it."""
        instance = Instance(jobs=[Job(id=0, r=0, p=3, d=9, w=1.0), Job(id=1, r=1, p=8, d=30, w=1.0)], k=8)
        trace = Trace(slots=[Unit(job=0, a=3), Unit(job=0, a=2), Unit(job=0, a=1)], completions={0: 3})
        capacity = ExponentialCapacity(C)

        assert slot_capacities(trace, instance, capacity) == pytest.approx([
            capacity.evaluate(1.0, 3, 3), capacity.evaluate(1.0, 2, 8), capacity.evaluate(1.0, 1, 8)
        ])
        assert run_rho(capacity, trace, instance) == pytest.approx(alpha(8, C))
        assert run_rho(capacity, Trace(slots=[Unit(job=0, a=3)]), instance) == pytest.approx(alpha(3, C))

    @given(data=instances_with_traces())
    @settings(max_examples=200, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    def test_matches_slotwise_checks(self, data):
        instance, trace = data
        assume(len(instance) > 0)
        for name in ("smith", "smith:remaining", "expcap:c=0.9", "srpt", "edf"):
            policy = policy_from_name(name)
            assert [v.slot for v in check_argmax(trace, instance, policy)] == slotwise_argmax(trace, instance, policy)
        for capacity in (SmithCapacity(), ExponentialCapacity(C), UnitCapacity()):
            rho = run_rho(capacity, trace, instance)
            assert [v.slot for v in check_validity(trace, instance, capacity)] == \
                slotwise_validity(trace, instance, capacity)
            assert [v.slot for v in check_monotonicity(trace, instance, capacity)] == \
                slotwise_monotonicity(trace, instance, capacity, rho)

    def test_long_runs(self):
        """A job of length 10^5 preempted once is audited clean without visiting every slot."""
        instance = Instance(
            jobs=[Job(id=0, r=0, p=100000, d=100010, w=1.0), Job(id=1, r=5, p=3, d=20, w=1.0)],
            k=100000
        )
        policy = policy_from_name("srpt")
        trace = simulate(instance, policy)

        assert [(start, end, job) for start, end, job, _ in trace.segments()] == [
            (0, 5, 0), (5, 8, 1), (8, 100003, 0)
        ]
        assert check_argmax(trace, instance, policy) == []
        assert check_monotonicity(trace, instance, policy) == []
        assert check_validity(trace, instance, policy) == []

    def test_edf_runs_between_events(self):
        schedule = edf_complete_schedule([Job(id=0, r=0, p=50000, d=60000, w=1.0), Job(id=1, r=7, p=2, d=10, w=1.0)])

        assert [(start, end, job) for start, end, job, _ in schedule.segments()] == [
            (0, 7, 0), (7, 9, 1), (9, 50002, 0)
        ]
        assert schedule.completions == {1: 9, 0: 50002}
        assert not edf_feasible([Job(id=0, r=0, p=50000, d=50001, w=1.0), Job(id=1, r=7, p=2, d=10, w=1.0)])


class TestOfflineEDF:
    """Test the feasibility certificate."""

    def test_two_job_schedule(self, smith_two_job):
        schedule = edf_complete_schedule(smith_two_job.jobs)

        assert schedule.slots == [Unit(job=0, a=4), Unit(job=0, a=3), Unit(job=0, a=2),
                                  Unit(job=0, a=1), Unit(job=1, a=1)]
        assert schedule.completions == {0: 4, 1: 5}

    def test_idle_gap(self):
        schedule = edf_complete_schedule([Job(id=3, r=2, p=1, d=3, w=1.0)])
        assert schedule.slots == [None, None, Unit(job=3, a=1)]

    def test_infeasible_sets(self):
        tight = [Job(id=0, r=0, p=2, d=2, w=1.0), Job(id=1, r=0, p=2, d=2, w=1.0)]
        assert not edf_feasible(tight)
        assert edf_complete_schedule(tight) is None
        assert not edf_feasible([Job(id=0, r=0, p=3, d=2, w=1.0)])
        assert edf_feasible([])


class TestExponentialCapacityAnalysis:
    """Test the helper functions behind the exponential capacity bound."""

    def test_alpha_and_pivot(self):
        assert alpha(16, C) == pytest.approx(1 - 0.81 * math.log(16) / 16)
        assert alpha(1, C) == alpha(2, C)
        assert expcap_pivot(16, C) == pytest.approx(1 / (1 - alpha(16, C)))
        assert validity_function(1, 16, C) == 1.0

    def test_pivot_direction(self):
        """f(x) / f(x-1) >= 1 exactly for x up to the pivot, for every k <= 4096."""
        for k in range(2, 4097):
            x = np.arange(2, k + 1, dtype=float)
            a = alpha(k, C)
            rising = x * a >= x - 1
            pivot = expcap_pivot(k, C)
            clear = np.abs(x - pivot) > 1e-9
            assert np.array_equal(rising[clear], (x <= pivot)[clear]), k

    def test_endpoint_check_matches_brute_force(self):
        """The closed-form endpoint test agrees with the full scan for every k <= 4096."""
        ks = np.arange(2, 4097)
        fast = expcap_endpoint_holds(ks, C)
        slow = np.array([expcap_conditions_hold(int(k), C) for k in ks])
        assert np.array_equal(fast, slow)

    def test_threshold(self):
        """The least k0 lies just above a million for c = 0.9."""
        k0 = expcap_threshold(C)

        assert 10 ** 6 < k0 < 12 * 10 ** 5
        assert expcap_conditions_hold(k0, C)
        assert not bool(expcap_endpoint_holds(np.array([k0 - 1]), C)[0])
        assert bool(np.all(expcap_endpoint_holds(np.arange(k0, k0 + 4), C)))

    @pytest.mark.parametrize("k", [4, 16, 64, 256])
    def test_type3_bound_dominated_by_claim(self, k):
        """The exact finite-k type 3 bound stays under the (1 + 1/c^2) k / ln k term."""
        assert expcap_type3_exact_bound(k, C) <= (1 + 1 / C ** 2) * k / math.log(k)

    def test_claimed_ratio(self):
        k = 16
        expected = 1 + k / (0.81 * math.log(k)) + (1 + 1 / 0.81) * k / math.log(k)
        assert expcap_claimed_ratio(k, C) == pytest.approx(expected)

    @given(c=st.floats(min_value=0.05, max_value=0.95), k=st.integers(min_value=3, max_value=500))
    @settings(max_examples=50, deadline=None)
    def test_alpha_in_unit_interval(self, c, k):
        assert 0.0 < alpha(k, c) < 1.0
