"""
Domain models for slotted single-machine deadline scheduling.
Defines jobs, instances, executed units, traces and the per-slot pending view,
together with the line-based text formats used for instance and trace files.
"""

from bisect import bisect_left
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, model_validator

from src.utils.exceptions import InstanceError


def format_weight(w: float) -> str:
    """Shortest decimal text that reads back to the same float."""
    return np.format_float_positional(w, unique=True, trim='-')


class Job(BaseModel):
    """A job with integer release, deadline and processing time and a positive weight."""

    id: int = Field(..., ge=0, description="Dense identifier, assigned in release order")
    r: int = Field(..., ge=0, description="Release slot")
    p: int = Field(..., ge=1, description="Processing time in slots")
    d: int = Field(..., description="Deadline; units may run in slots r <= t < d")
    w: float = Field(..., gt=0, description="Weight gained on completion by the deadline")

    @model_validator(mode='after')
    def validate_window(self) -> 'Job':
        """Release must precede the deadline; r + p > d is legal (infeasible job)."""
        if self.r >= self.d:
            raise ValueError(f"job {self.id}: release {self.r} must be before deadline {self.d}")
        return self

    @property
    def smith_ratio(self) -> float:
        """Weight per unit of processing, w/p."""
        return self.w / self.p

    @property
    def feasible(self) -> bool:
        """Whether the job can complete at all when run alone."""
        return self.r + self.p <= self.d

    @property
    def tight(self) -> bool:
        """Whether the job must run in every slot of its window."""
        return self.r + self.p == self.d

    def to_line(self) -> str:
        """Convert job to the `<id> <r> <p> <d> <w>` instance line."""
        return f"{self.id} {self.r} {self.p} {self.d} {format_weight(self.w)}"

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {"id": 0, "r": 0, "p": 2, "d": 4, "w": 1.5}
        }
    }


class Instance(BaseModel):
    """A finite job set with its declared processing-time bound."""

    jobs: List[Job] = Field(default_factory=list, description="Jobs in release order")
    k: int = Field(..., ge=1, description="Declared bound on processing times")
    equal_lengths: bool = Field(False, description="All jobs have p = k")

    _by_id: Dict[int, Job] = PrivateAttr(default_factory=dict)

    @model_validator(mode='after')
    def validate_jobs(self) -> 'Instance':
        """Check ids are unique and processing times respect k."""
        seen: Dict[int, Job] = {}
        for job in self.jobs:
            if job.id in seen:
                raise ValueError(f"duplicate job id {job.id}")
            if job.p > self.k:
                raise ValueError(f"job {job.id} has p={job.p} above k={self.k}")
            if self.equal_lengths and job.p != self.k:
                raise ValueError(f"job {job.id} has p={job.p} but equal lengths require p={self.k}")
            seen[job.id] = job
        self._by_id = seen
        return self

    def job(self, job_id: int) -> Job:
        """Look up a job by id."""
        try:
            return self._by_id[job_id]
        except KeyError:
            raise InstanceError(f"unknown job id {job_id}") from None

    def __len__(self) -> int:
        return len(self.jobs)

    @property
    def ids(self) -> List[int]:
        return [job.id for job in self.jobs]

    @property
    def horizon(self) -> int:
        """Latest deadline, or 0 for an empty instance."""
        return max((job.d for job in self.jobs), default=0)

    @property
    def max_p(self) -> int:
        return max((job.p for job in self.jobs), default=0)

    @property
    def total_weight(self) -> float:
        return float(sum(job.w for job in self.jobs))

    def subset(self, ids: Iterable[int]) -> 'Instance':
        """Instance restricted to the given ids, keeping order and metadata."""
        wanted = set(ids)
        return Instance(
            jobs=[job for job in self.jobs if job.id in wanted],
            k=self.k,
            equal_lengths=self.equal_lengths
        )

    def with_job(self, job: Job) -> 'Instance':
        """Instance with one more job appended."""
        return Instance(jobs=[*self.jobs, job], k=self.k, equal_lengths=self.equal_lengths)

    def to_text(self) -> str:
        """Serialize to the line-based instance format."""
        lines = [f"k {self.k} equal {int(self.equal_lengths)}"]
        lines.extend(job.to_line() for job in self.jobs)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> 'Instance':
        """Parse the line-based instance format; blank lines and `#` comments are skipped."""
        header: Optional[Tuple[int, bool]] = None
        jobs: List[Job] = []

        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.split()

            if header is None:
                if len(parts) != 4 or parts[0] != 'k' or parts[2] != 'equal' or parts[3] not in ('0', '1'):
                    raise InstanceError("expected header `k <int> equal <0|1>`", line=number, content=raw)
                try:
                    header = (int(parts[1]), parts[3] == '1')
                except ValueError:
                    raise InstanceError("k must be an integer", line=number, content=raw) from None
                continue

            if len(parts) != 5:
                raise InstanceError("expected job line `<id> <r> <p> <d> <w>`", line=number, content=raw)
            try:
                jobs.append(Job(
                    id=int(parts[0]),
                    r=int(parts[1]),
                    p=int(parts[2]),
                    d=int(parts[3]),
                    w=float(parts[4])
                ))
            except ValueError as e:
                raise InstanceError(f"invalid job line: {e}", line=number, content=raw) from None

        if header is None:
            raise InstanceError("missing instance header")

        try:
            return cls(jobs=jobs, k=header[0], equal_lengths=header[1])
        except ValueError as e:
            raise InstanceError(f"invalid instance: {e}") from None


class Unit(BaseModel):
    """One slot of execution of `job`, run while its remaining time was `a`."""

    job: int = Field(..., ge=0, description="Job id")
    a: int = Field(..., ge=1, description="Remaining processing time when the slot started")

    model_config = {"frozen": True}


class Trace(BaseModel):
    """Slot-by-slot record of a schedule plus completion times."""

    slots: List[Optional[Unit]] = Field(default_factory=list, description="Unit run at slot t, or None when idle")
    completions: Dict[int, int] = Field(default_factory=dict, description="Job id -> completion time t+1")

    _runs: Dict[int, List[Tuple[int, int]]] = PrivateAttr(default_factory=dict)
    _run_slots: Dict[int, List[int]] = PrivateAttr(default_factory=dict)
    _segments: List[Tuple[int, int, Optional[int], int]] = PrivateAttr(default_factory=list)

    @model_validator(mode='after')
    def index_runs(self) -> 'Trace':
        """Index the (slot, remaining) pairs of every job and the uninterrupted stretches."""
        runs: Dict[int, List[Tuple[int, int]]] = {}
        segments: List[List] = []
        for t, unit in enumerate(self.slots):
            last = segments[-1] if segments else None
            if unit is None:
                if last is not None and last[2] is None:
                    last[1] = t + 1
                else:
                    segments.append([t, t + 1, None, 0])
                continue
            runs.setdefault(unit.job, []).append((t, unit.a))
            if last is not None and last[2] == unit.job and unit.a == last[3] - (t - last[0]):
                last[1] = t + 1
            else:
                segments.append([t, t + 1, unit.job, unit.a])
        self._runs = runs
        self._run_slots = {job_id: [slot for slot, _ in pairs] for job_id, pairs in runs.items()}
        self._segments = [tuple(segment) for segment in segments]
        return self

    @property
    def length(self) -> int:
        return len(self.slots)

    def unit_at(self, t: int) -> Optional[Unit]:
        """Unit run at slot t; slots past the end are idle."""
        if 0 <= t < len(self.slots):
            return self.slots[t]
        return None

    def runs_of(self, job_id: int) -> List[Tuple[int, int]]:
        """(slot, remaining) pairs of a job in time order."""
        return self._runs.get(job_id, [])

    def segments(self) -> List[Tuple[int, int, Optional[int], int]]:
        """
        Maximal stretches (start, end, job, a) over which one job runs with
        remaining time a, a - 1, ... from slot `start` to `end - 1`; job is None
        and a is 0 for idle stretches.
        """
        return self._segments

    def completion_time(self, job_id: int) -> Optional[int]:
        return self.completions.get(job_id)

    def completed_by(self, job_id: int, t: int) -> bool:
        """Whether the job completed at or before time t."""
        completion = self.completions.get(job_id)
        return completion is not None and completion <= t

    def remaining(self, job: Job, t: int) -> int:
        """Remaining processing time q(t) of a job at the start of slot t."""
        index = bisect_left(self._run_slots.get(job.id, []), t)
        if index == 0:
            return job.p
        return self._runs[job.id][index - 1][1] - 1

    def completed_jobs(self) -> List[int]:
        """Completed job ids ordered by completion time, then id."""
        return [job_id for job_id, _ in sorted(self.completions.items(), key=lambda item: (item[1], item[0]))]

    def to_text(self) -> str:
        """Serialize to the line-based trace format."""
        lines = []
        for t, unit in enumerate(self.slots):
            if unit is None:
                lines.append(f"t {t} idle")
            else:
                lines.append(f"t {t} job {unit.job} rem {unit.a}")
        for job_id in self.completed_jobs():
            lines.append(f"complete {job_id} at {self.completions[job_id]}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> 'Trace':
        """Parse the line-based trace format; slots must be listed from 0 upwards."""
        slots: List[Optional[Unit]] = []
        completions: Dict[int, int] = {}

        for number, raw in enumerate(text.splitlines(), start=1):
            parts = raw.split('#', 1)[0].split()
            if not parts:
                continue
            try:
                if parts[0] == 't' and len(parts) == 3 and parts[2] == 'idle':
                    t = int(parts[1])
                    unit = None
                elif parts[0] == 't' and len(parts) == 6 and parts[2] == 'job' and parts[4] == 'rem':
                    t = int(parts[1])
                    unit = Unit(job=int(parts[3]), a=int(parts[5]))
                elif parts[0] == 'complete' and len(parts) == 4 and parts[2] == 'at':
                    completions[int(parts[1])] = int(parts[3])
                    continue
                else:
                    raise InstanceError("unrecognised trace line", line=number, content=raw)
            except ValueError as e:
                raise InstanceError(f"invalid trace line: {e}", line=number, content=raw) from None

            if t != len(slots):
                raise InstanceError(f"expected slot {len(slots)}, found {t}", line=number, content=raw)
            slots.append(unit)

        return cls(slots=slots, completions=completions)


class PendingEntry(BaseModel):
    """A released, uncompleted job as seen by a policy at one slot."""

    job: Job
    remaining: int = Field(..., ge=1, description="q_j(t)")
    pending: bool = Field(..., description="t + q_j(t) <= d_j")


class PendingView(BaseModel):
    """What an online policy may see at slot t."""

    t: int = Field(..., ge=0)
    k_star: int = Field(0, ge=0, description="Largest processing time among released jobs")
    entries: List[PendingEntry] = Field(default_factory=list)

    @property
    def pending(self) -> List[PendingEntry]:
        """Entries the machine may run at t, in id order."""
        return [entry for entry in self.entries if entry.pending]

    def entry(self, job_id: int) -> Optional[PendingEntry]:
        for entry in self.entries:
            if entry.job.id == job_id:
                return entry
        return None


def is_pending(job: Job, remaining: int, t: int, completed: bool = False) -> bool:
    """Released, uncompleted, and still able to finish: r <= t and t + q <= d."""
    return not completed and remaining > 0 and job.r <= t and t + remaining <= job.d


def pending_at(trace: Trace, job: Job, t: int) -> bool:
    """Whether the job is pending for the schedule recorded in `trace` at time t."""
    return is_pending(job, trace.remaining(job, t), t, completed=trace.completed_by(job.id, t))

