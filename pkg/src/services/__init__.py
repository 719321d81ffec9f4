"""
Service layer for the deadline scheduling toolkit.
Contains the simulator, policies, oracle, audits, adversaries and experiment harness.
"""

from .simulator import Simulation, simulate, gain, critical_time
from .policies import OnlinePolicy, policy_from_name
from .oracle import offline_optimum, exhaustive_schedule_optimum

__all__ = [
    "Simulation",
    "simulate",
    "gain",
    "critical_time",
    "OnlinePolicy",
    "policy_from_name",
    "offline_optimum",
    "exhaustive_schedule_optimum"
]
