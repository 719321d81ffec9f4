"""
Experiment and run-record models.
Optimum results, adversary transcripts, suite configuration and ratio records.
"""

import csv
import io
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from src.models.charging import Violation
from src.models.domain import Instance, Job, Trace
from src.utils.exceptions import InstanceError


class OptimumResult(BaseModel):
    """Heaviest feasible subset with its EDF witness schedule."""

    subset: List[int] = Field(default_factory=list, description="Chosen job ids, ascending")
    gain: float = Field(0.0, ge=0.0)
    witness: Trace = Field(default_factory=Trace)


class WeightSequence(BaseModel):
    """Weights released by the equal-length adversary for a target ratio R."""

    R: float
    x: List[float] = Field(default_factory=list, description="x_0, x_1, ... up to and including x_{i0}")
    X: List[float] = Field(default_factory=list, description="X_t = x_t + x_{t-2} + ...")
    s: List[float] = Field(default_factory=list, description="s_i from its own recurrence")
    s_from_X: List[float] = Field(default_factory=list, description="R (1 - X_{i-1} / X_{i+1})")
    i0: Optional[int] = Field(None, description="First index with x non-positive")
    precision_bits: int = 53


class AdversaryStep(BaseModel):
    """One slot of an adversary game."""

    t: int
    released: List[Job] = Field(default_factory=list)
    action: Optional[int] = Field(None, description="Job the policy ran, None when idle")


class AdversaryRun(BaseModel):
    """Transcript and outcome of an adaptive adversary game."""

    construction: str
    policy: str
    k: int
    parameters: Dict[str, float] = Field(default_factory=dict)
    steps: List[AdversaryStep] = Field(default_factory=list)
    instance: Instance
    trace: Trace
    algorithm_gain: float
    adversary_gain: float
    adversary_schedule: Optional[Trace] = None
    adversary_completed: List[int] = Field(default_factory=list)
    sequence: Optional[WeightSequence] = None

    @property
    def forced_ratio(self) -> float:
        """adversary / algorithm gain; +inf when the algorithm gains nothing."""
        if self.algorithm_gain <= 0:
            return math.inf if self.adversary_gain > 0 else 1.0
        return self.adversary_gain / self.algorithm_gain

    @property
    def algorithm_completions(self) -> int:
        return len(self.trace.completions)


class GeneratorSpec(BaseModel):
    """Random instance family; a seed fixes one member."""

    k: int = Field(..., ge=1)
    n: int = Field(..., ge=0)
    equal_lengths: bool = False
    unit_weights: bool = False
    integer_weights: bool = False
    slack: float = Field(1.0, ge=0.0)
    horizon: int = Field(10, ge=1)


class ExperimentConfig(BaseModel):
    """Declarative description of a ratio suite."""

    name: str = Field("suite", description="Label used in logs and output files")
    policies: List[str] = Field(..., min_length=1, description="Policy names, e.g. `smith:remaining`")
    k_values: List[int] = Field(default_factory=lambda: [2], description="Processing-time bounds to sweep")
    n_values: List[int] = Field(default_factory=lambda: [6], description="Instance sizes to sweep")
    seeds: List[int] = Field(default_factory=lambda: list(range(10)))
    equal_lengths: bool = False
    unit_weights: bool = False
    integer_weights: bool = False
    slack: float = Field(1.0, ge=0.0)
    horizon: int = Field(10, ge=1)
    instance_files: List[str] = Field(default_factory=list, description="Fixed instances run instead of the generator")
    audit: bool = Field(False, description="Build and check charge ledgers")
    keep_going: bool = Field(False, description="Record violations instead of aborting")
    output: Optional[str] = Field(None, description="CSV path for the records")
    expcap_c: Optional[float] = None
    oracle_budget: Optional[int] = None

    @field_validator('k_values', 'n_values')
    @classmethod
    def validate_ranges(cls, v):
        """Sizes must be non-empty lists of non-negative integers."""
        if not v:
            raise ValueError('at least one value is required')
        if any(value < 0 for value in v):
            raise ValueError('values must be non-negative')
        return v

    @model_validator(mode='after')
    def validate_k(self) -> 'ExperimentConfig':
        if any(k < 1 for k in self.k_values):
            raise ValueError('k values must be at least 1')
        return self

    def generator(self, k: int, n: int) -> GeneratorSpec:
        return GeneratorSpec(
            k=k, n=n,
            equal_lengths=self.equal_lengths,
            unit_weights=self.unit_weights,
            integer_weights=self.integer_weights,
            slack=self.slack,
            horizon=self.horizon
        )

    @classmethod
    def from_yaml(cls, content: Union[str, Path]) -> 'ExperimentConfig':
        """Parse a suite declaration from YAML text or a YAML file."""
        if isinstance(content, Path):
            content = content.read_text()
        try:
            data = yaml.safe_load(content)
        except yaml.YAMLError as e:
            raise InstanceError(f"invalid YAML: {e}") from e

        if not isinstance(data, dict):
            raise InstanceError("suite configuration must be a YAML mapping")
        return cls.from_mapping(data)

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Build a config from a plain mapping, accepting `k`/`n` range shorthands."""
        data = dict(data)
        try:
            # `k: 2..5` shorthand for a range
            for key, target in (("k", "k_values"), ("n", "n_values")):
                if key in data and target not in data:
                    data[target] = _parse_range(data.pop(key))
            return cls(**data)
        except ValueError as e:
            raise InstanceError(f"invalid suite configuration: {e}") from None


def _parse_range(value: Any) -> List[int]:
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        return [int(item) for item in value]
    text = str(value)
    if ".." in text:
        low, high = text.split("..", 1)
        return list(range(int(low), int(high) + 1))
    return [int(part) for part in text.split(",")]


class RatioRecord(BaseModel):
    """Outcome of one policy on one instance."""

    instance: str = Field(..., description="Instance descriptor, e.g. `k=3,n=8,seed=17`")
    policy: str
    k: int
    n: int
    seed: Optional[int] = None
    algorithm_gain: float
    oracle_gain: float
    ratio: float
    type1_total: Optional[float] = None
    type2_total: Optional[float] = None
    type3_total: Optional[float] = None
    violations: int = 0

    @model_validator(mode='after')
    def validate_dominance(self) -> 'RatioRecord':
        """The oracle dominates every policy."""
        if self.algorithm_gain > self.oracle_gain * (1 + 1e-9) + 1e-9:
            raise ValueError(
                f"algorithm gain {self.algorithm_gain} exceeds oracle gain {self.oracle_gain}"
            )
        return self


RATIO_CSV_FIELDS = list(RatioRecord.model_fields)


def write_records_csv(records: List[RatioRecord]) -> str:
    """Serialize records to CSV text with a header row."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=RATIO_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        row = record.model_dump()
        writer.writerow({
            key: "" if value is None else (repr(value) if isinstance(value, float) else value)
            for key, value in row.items()
        })
    return buffer.getvalue()


def read_records_csv(text: str) -> List[RatioRecord]:
    """Parse CSV text written by `write_records_csv`."""
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        cleaned = {key: (None if value == "" else value) for key, value in row.items()}
        try:
            records.append(RatioRecord(**cleaned))
        except ValueError as e:
            raise InstanceError(f"invalid record row: {e}", line=reader.line_num) from None
    return records


class SuiteTask(BaseModel):
    """One (instance, policy) evaluation of a ratio suite."""

    index: int = Field(..., ge=0, description="Position in the suite; results merge in this order")
    policy: str
    descriptor: str
    seed: Optional[int] = None
    generator: Optional[GeneratorSpec] = None
    instance_text: Optional[str] = Field(None, description="Fixed instance, used instead of the generator")
    audit: bool = False
    oracle_budget: Optional[int] = None


class TaskOutcome(BaseModel):
    """Record and audit findings of one suite task."""

    index: int
    record: Optional[RatioRecord] = None
    violations: List[Violation] = Field(default_factory=list)
    instance_text: str


class SuiteSummary(BaseModel):
    """Ratio statistics of one (policy, k) group."""

    policy: str
    k: int
    count: int
    max_ratio: float
    mean_ratio: float

    def to_line(self) -> str:
        return (f"summary policy={self.policy} k={self.k} n_instances={self.count} "
                f"max_ratio={self.max_ratio:.6g} mean_ratio={self.mean_ratio:.6g}")
