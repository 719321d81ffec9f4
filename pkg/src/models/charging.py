"""
Charging models.
Charges, ledgers, per-target summaries, violations and the interval labelling
produced by the equal-length audit.
"""

from enum import IntEnum
from typing import ClassVar, Dict, List, Optional

from pydantic import BaseModel, Field


class ChargeKind(IntEnum):
    """Classification of an adversary unit."""
    SELF = 1
    FORWARD = 2
    CRITICAL = 3


class Violation(BaseModel):
    """A broken inequality or precondition found on a concrete run."""

    kind: str = Field(..., description="Short machine-readable category")
    message: str = Field(..., description="Human-readable explanation")
    slot: Optional[int] = Field(None, description="Slot where the violation shows")
    job_id: Optional[int] = Field(None, description="Job involved, if any")
    target_id: Optional[int] = Field(None, description="Charge target involved, if any")
    observed: Optional[float] = Field(None, description="Observed value")
    limit: Optional[float] = Field(None, description="Bound the observed value had to respect")

    def __str__(self) -> str:
        where = f" at slot {self.slot}" if self.slot is not None else ""
        return f"[{self.kind}]{where}: {self.message}"


class Charge(BaseModel):
    """One adversary unit (job, b) run at `slot`, charged to `target`."""

    job: int = Field(..., description="Adversary job id")
    b: int = Field(..., ge=1, description="Adversary remaining time when the unit ran")
    slot: int = Field(..., ge=0)
    target: int = Field(..., description="Algorithm-completed job receiving the charge")
    kind: ChargeKind
    amount: float = Field(..., description="w_j / p_j")
    p: int = Field(..., ge=1, description="Processing time of the source job")


class TargetTotals(BaseModel):
    """Charge totals of one target, split by kind."""

    target_id: int
    type1_total: float = 0.0
    type2_total: float = 0.0
    type3_total: float = 0.0
    type3_count: int = 0

    @property
    def total(self) -> float:
        return self.type1_total + self.type2_total + self.type3_total


class ChargeLedger(BaseModel):
    """Assignment of every adversary unit to a job the algorithm completed."""

    capacity: str = Field(..., description="Name of the capacity function")
    rho: float = Field(..., description="Monotonicity constant in force for the run")
    k: int = Field(..., ge=1, description="Processing-time bound of the instance")
    charges: List[Charge] = Field(default_factory=list)
    violations: List[Violation] = Field(default_factory=list)
    target_capacity: Dict[int, float] = Field(
        default_factory=dict, description="pi(i, 1) for every job the algorithm completed"
    )
    target_weight: Dict[int, float] = Field(default_factory=dict, description="w_i per completed job")
    algorithm_gain: float = 0.0
    adversary_gain: float = 0.0

    def totals(self) -> Dict[int, TargetTotals]:
        """Per-target totals, including completed jobs that received nothing."""
        rows = {target: TargetTotals(target_id=target) for target in self.target_weight}
        for charge in self.charges:
            row = rows.setdefault(charge.target, TargetTotals(target_id=charge.target))
            if charge.kind == ChargeKind.SELF:
                row.type1_total += charge.amount
            elif charge.kind == ChargeKind.FORWARD:
                row.type2_total += charge.amount
            else:
                row.type3_total += charge.amount
                row.type3_count += 1
        return dict(sorted(rows.items()))

    def charges_to(self, target: int, kind: Optional[ChargeKind] = None) -> List[Charge]:
        return [
            charge for charge in self.charges
            if charge.target == target and (kind is None or charge.kind == kind)
        ]

    @property
    def total_charged(self) -> float:
        return float(sum(charge.amount for charge in self.charges))


class CheckReport(BaseModel):
    """Outcome of one bound check over a ledger or trace."""

    check: str
    violations: List[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


class LedgerRow(BaseModel):
    """One line of the per-target audit table."""

    target_id: int
    type1_total: float
    type2_total: float
    type3_total: float
    type3_count: int
    bound: Optional[float] = Field(None, description="Claimed competitive ratio times w_target")
    passed: bool

    CSV_COLUMNS: ClassVar[List[str]] = ["target_id", "type1_total", "type2_total", "type3_total", "type3_count", "bound", "pass"]

    def to_csv_row(self) -> List[str]:
        return [
            str(self.target_id),
            repr(self.type1_total),
            repr(self.type2_total),
            repr(self.type3_total),
            str(self.type3_count),
            "" if self.bound is None else repr(self.bound),
            "1" if self.passed else "0"
        ]


class IntervalLabel(BaseModel):
    """Interval [start, end) labelled (b, i) with end = C_i - b*k."""

    start: int
    end: int
    b: int = Field(..., ge=0)
    i: int = Field(..., description="Algorithm-completed job owning the interval")
    mark: Optional[int] = Field(None, description="Adversary job charged on this interval")
    pending: List[int] = Field(default_factory=list, description="Snapshot of P at the interval end")

    @property
    def length(self) -> int:
        return self.end - self.start


class ConservativeAuditReport(BaseModel):
    """Result of the interval-marking audit for equal-length instances."""

    k: int
    intervals: List[IntervalLabel] = Field(default_factory=list)
    self_charged: List[int] = Field(default_factory=list, description="Jobs completed by both sides")
    charges: Dict[int, List[int]] = Field(
        default_factory=dict, description="Completed job -> adversary jobs charged to it"
    )
    charge_weight: Dict[int, float] = Field(default_factory=dict, description="Non-self charge per completed job")
    violations: List[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations
