"""
Data models for the deadline scheduling toolkit.
Includes the scheduling domain, charge ledgers and experiment records.
"""

from .charging import *
from .domain import *
from .experiment import *

__all__ = [
    # Domain Models
    "Job",
    "Instance",
    "Unit",
    "Trace",
    "PendingEntry",
    "PendingView",

    # Charging Models
    "ChargeKind",
    "Charge",
    "ChargeLedger",
    "Violation",
    "LedgerRow",
    "ConservativeAuditReport",

    # Experiment Models
    "OptimumResult",
    "WeightSequence",
    "AdversaryRun",
    "ExperimentConfig",
    "RatioRecord"
]
