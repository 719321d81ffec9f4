"""
Slotted simulation engine.
Drives an online policy over the slots of an instance, records the executed
units and completions, and answers the trace queries used by the charging audits.
"""

from bisect import bisect_right
from typing import TYPE_CHECKING, Dict, Iterable, Iterator, List, Optional, Tuple

from src.models.domain import Instance, Job, PendingEntry, PendingView, Trace, Unit, is_pending
from src.utils.exceptions import InstanceError, InvalidQueryError, SimulationFault
from src.utils.logging import log_simulation

if TYPE_CHECKING:
    from src.services.policies import OnlinePolicy


class Simulation:
    """Step-wise driver shared by `simulate` and the adaptive adversaries."""

    def __init__(self, policy: "OnlinePolicy", k: int, equal_lengths: bool = False):
        policy.bind(k, equal_lengths)
        self.policy = policy
        self.k = k
        self.equal_lengths = equal_lengths
        self.t = 0
        self.k_star = 0
        self._jobs: Dict[int, Job] = {}
        self._remaining: Dict[int, int] = {}
        self._slots: List[Optional[Unit]] = []
        self._completions: Dict[int, int] = {}

    def release(self, job: Job) -> None:
        """Reveal a job; only jobs with r equal to the current slot may be released."""
        if job.r != self.t:
            raise SimulationFault(
                f"job {job.id} has release {job.r} but the clock is at {self.t}",
                slot=self.t, job_id=job.id
            )
        if job.id in self._jobs:
            raise InstanceError(f"job {job.id} released twice")
        if job.p > self.k or (self.equal_lengths and job.p != self.k):
            raise InstanceError(f"job {job.id} with p={job.p} violates k={self.k}")

        self._jobs[job.id] = job
        self._remaining[job.id] = job.p
        self.k_star = max(self.k_star, job.p)

    def release_all(self, jobs: Iterable[Job]) -> None:
        for job in jobs:
            self.release(job)

    def remaining(self, job_id: int) -> int:
        return self._remaining[job_id]

    def completed(self, job_id: int) -> bool:
        return job_id in self._completions

    @property
    def completions(self) -> Dict[int, int]:
        return dict(self._completions)

    @property
    def released(self) -> List[Job]:
        return list(self._jobs.values())

    def view(self) -> PendingView:
        """Released, uncompleted jobs at the current slot, in id order."""
        entries = [
            PendingEntry(
                job=job,
                remaining=self._remaining[job_id],
                pending=is_pending(job, self._remaining[job_id], self.t)
            )
            for job_id, job in sorted(self._jobs.items())
            if self._remaining[job_id] > 0
        ]
        return PendingView(t=self.t, k_star=self.k_star, entries=entries)

    def has_pending(self) -> bool:
        return any(
            is_pending(job, self._remaining[job_id], self.t)
            for job_id, job in self._jobs.items()
        )

    def step(self) -> Optional[Unit]:
        """Ask the policy for one slot of work and advance the clock."""
        view = self.view()
        choice = self.policy.choose(view) if view.pending else None

        unit: Optional[Unit] = None
        if choice is not None:
            entry = view.entry(choice)
            if entry is None:
                raise SimulationFault(
                    f"policy {self.policy.name} chose unreleased or completed job {choice}",
                    slot=self.t, job_id=choice
                )
            if not entry.pending:
                raise SimulationFault(
                    f"policy {self.policy.name} chose job {choice}, which is not pending",
                    slot=self.t, job_id=choice
                )
            unit = Unit(job=choice, a=entry.remaining)
            self._remaining[choice] -= 1
            if self._remaining[choice] == 0:
                self._completions[choice] = self.t + 1

        self._slots.append(unit)
        self.t += 1
        return unit

    def advance(self, until: Optional[int] = None) -> None:
        """
        Step once, then keep going while the outcome is already known: idle slots
        while nothing is pending, or further units of the chosen job when the
        policy keeps its choice until the next release. Stops at `until` if given.
        """
        unit = self.step()
        if until is not None and self.t >= until:
            return

        if unit is None:
            if until is not None and not self.has_pending():
                self._slots.extend([None] * (until - self.t))
                self.t = until
            return

        if not self.policy.stable_choice:
            return
        count = self._remaining[unit.job]
        if until is not None:
            count = min(count, until - self.t)
        if count <= 0:
            return

        a = self._remaining[unit.job]
        self._slots.extend(Unit(job=unit.job, a=value) for value in range(a, a - count, -1))
        self._remaining[unit.job] -= count
        self.t += count
        if self._remaining[unit.job] == 0:
            self._completions[unit.job] = self.t

    def idle_until(self, t: int) -> None:
        """Step the policy until the clock reaches t."""
        while self.t < t:
            self.step()

    def trace(self) -> Trace:
        return Trace(slots=list(self._slots), completions=dict(self._completions))

    def gain(self) -> float:
        return float(sum(self._jobs[job_id].w for job_id in self._completions))


def simulate(instance: Instance, policy: "OnlinePolicy") -> Trace:
    """Run an online policy over an instance until no work can be done anymore."""
    simulation = Simulation(policy, instance.k, instance.equal_lengths)
    releases = sorted(instance.jobs, key=lambda job: (job.r, job.id))
    index = 0

    while True:
        while index < len(releases) and releases[index].r == simulation.t:
            simulation.release(releases[index])
            index += 1
        if index == len(releases) and not simulation.has_pending():
            break
        simulation.advance(releases[index].r if index < len(releases) else None)

    trace = simulation.trace()
    log_simulation(policy.name, len(instance), trace.length, gain(trace, instance))
    return trace


def gain(trace: Trace, instance: Instance) -> float:
    """Total weight of the jobs the trace completes."""
    return float(sum(instance.job(job_id).w for job_id in trace.completions))


def critical_time(trace: Trace, job: Job) -> Optional[int]:
    """Last slot s with s + q(s) = d, for a job the trace never completes."""
    if job.id in trace.completions:
        raise InvalidQueryError(
            f"job {job.id} is completed; critical time is defined for uncompleted jobs only",
            details={"job_id": job.id}
        )
    runs = trace.runs_of(job.id)
    # q is constant between consecutive runs; scan those intervals from the latest
    for index in range(len(runs), -1, -1):
        lo = runs[index - 1][0] + 1 if index > 0 else job.r
        hi = runs[index][0] if index < len(runs) else job.d - 1
        q = runs[index - 1][1] - 1 if index > 0 else job.p
        lo, hi = max(lo, job.r), min(hi, job.d - 1)
        tau = job.d - q
        if lo <= tau <= hi:
            return tau
    return None


def replay_views(trace: Trace, instance: Instance) -> Iterator[Tuple[int, PendingView]]:
    """Rebuild the pending view the scheduler had at every slot of a trace."""
    remaining = {job.id: job.p for job in instance.jobs}
    for t in range(trace.length):
        released = [job for job in instance.jobs if job.r <= t and remaining[job.id] > 0]
        k_star = max((job.p for job in instance.jobs if job.r <= t), default=0)
        entries = [
            PendingEntry(job=job, remaining=remaining[job.id], pending=is_pending(job, remaining[job.id], t))
            for job in sorted(released, key=lambda job: job.id)
        ]
        yield t, PendingView(t=t, k_star=k_star, entries=entries)

        unit = trace.slots[t]
        if unit is not None and unit.job in remaining:
            remaining[unit.job] -= 1


def replay_segments(trace: Trace, instance: Instance) -> Iterator[Tuple[int, int, PendingView]]:
    """
    Stretches [start, end) of a trace over which the released set, k* and every
    pending flag stay fixed, with the view as it stood at `start`.

    Inside a stretch only the job the trace runs changes: at slot start + o its
    remaining time is o lower than in the view. Gives the same views as
    `replay_views` at a cost driven by releases and preemptions, not by slots.
    """
    jobs = sorted(instance.jobs, key=lambda job: (job.r, job.id))
    release_times = sorted({job.r for job in jobs})
    remaining = {job.id: job.p for job in jobs}
    released = 0
    k_star = 0

    for segment_start, segment_end, job_id, _ in trace.segments():
        running = job_id if job_id in remaining else None
        t = segment_start
        while t < segment_end:
            while released < len(jobs) and jobs[released].r <= t:
                k_star = max(k_star, jobs[released].p)
                released += 1

            end = segment_end
            following = bisect_right(release_times, t)
            if following < len(release_times):
                end = min(end, release_times[following])

            entries: List[PendingEntry] = []
            for job in sorted(jobs[:released], key=lambda job: job.id):
                q = remaining[job.id]
                if q <= 0:
                    continue
                pending = is_pending(job, q, t)
                if job.id == running:
                    end = min(end, t + q)
                elif pending:
                    # stops being pending once t + q passes d
                    end = min(end, job.d - q + 1)
                entries.append(PendingEntry(job=job, remaining=q, pending=pending))

            yield t, end, PendingView(t=t, k_star=k_star, entries=entries)

            if running is not None:
                remaining[running] -= end - t
            t = end


def validate_trace(trace: Trace, instance: Instance) -> List[str]:
    """Well-formedness issues of a trace against its instance; empty when valid."""
    issues: List[str] = []
    expected: Dict[int, int] = {}

    for t, unit in enumerate(trace.slots):
        if unit is None:
            continue
        try:
            job = instance.job(unit.job)
        except InstanceError:
            issues.append(f"slot {t}: unknown job {unit.job}")
            continue
        if not job.r <= t < job.d:
            issues.append(f"slot {t}: job {job.id} runs outside [{job.r}, {job.d})")
        want = expected.get(job.id, job.p)
        if unit.a != want:
            issues.append(f"slot {t}: job {job.id} runs with remaining {unit.a}, expected {want}")
        expected[job.id] = unit.a - 1
        if unit.a == 1 and trace.completions.get(job.id) != t + 1:
            issues.append(f"slot {t}: job {job.id} finished but completion is not recorded at {t + 1}")

    for job_id, completion in trace.completions.items():
        if expected.get(job_id) != 0:
            issues.append(f"job {job_id} is marked complete at {completion} without running all units")

    return issues
