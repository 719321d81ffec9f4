"""
Utility modules for the deadline scheduling toolkit.
Provides logging, exception handling and numeric helpers.
"""

from .logging import logger, setup_logging
from .exceptions import (
    SchedulingError,
    InstanceError,
    ConfigurationError,
    SimulationFault,
    AuditViolationError
)

__all__ = [
    "logger",
    "setup_logging",
    "SchedulingError",
    "InstanceError",
    "ConfigurationError",
    "SimulationFault",
    "AuditViolationError"
]
