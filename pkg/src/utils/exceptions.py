"""
Custom exception classes for the deadline scheduling toolkit.
Provides structured error handling across simulation, audits and the CLI.
"""

from typing import Optional, Dict, Any, List


class SchedulingError(Exception):
    """Base exception class for scheduling toolkit errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """Initialize exception with message and optional details."""
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        """String representation of the exception."""
        return self.message

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for structured logs and reports."""
        return {
            "error": self.__class__.__name__.lower().replace("error", "_error"),
            "message": self.message,
            "details": self.details
        }


class InstanceError(SchedulingError):
    """Raised when an instance, trace or config document is malformed."""

    def __init__(self, message: str, line: Optional[int] = None,
                 content: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize with the offending line number and content, if known."""
        super().__init__(message, details)
        self.line = line
        self.content = content

        if line is not None:
            self.details["line_number"] = line
        if content is not None:
            self.details["line_content"] = content


class ConfigurationError(SchedulingError):
    """Raised when a policy or run is configured inconsistently."""

    def __init__(self, message: str, parameter: Optional[str] = None,
                 value: Optional[Any] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize configuration error with optional parameter information."""
        super().__init__(message, details)
        self.parameter = parameter
        self.value = value

        if parameter:
            self.details["parameter"] = parameter
        if value is not None:
            self.details["value"] = str(value)


class DomainError(ConfigurationError):
    """Raised when a numeric parameter lies outside its mathematical domain."""
    pass


class InvalidQueryError(SchedulingError):
    """Raised when a trace query is asked outside its precondition."""
    pass


class SimulationFault(SchedulingError):
    """Raised when a policy selects a job that may not run in the current slot."""

    def __init__(self, message: str, slot: Optional[int] = None,
                 job_id: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize simulation fault with the slot and job involved."""
        super().__init__(message, details)
        self.slot = slot
        self.job_id = job_id

        if slot is not None:
            self.details["slot"] = slot
        if job_id is not None:
            self.details["job_id"] = job_id


class AuditViolationError(SchedulingError):
    """Raised when an audit finds violations and the caller treats them as fatal."""

    def __init__(self, message: str, violations: Optional[List[Any]] = None,
                 instance_path: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize with the violations found and the reproduction file path."""
        super().__init__(message, details)
        self.violations = violations or []
        self.instance_path = instance_path

        self.details["violation_count"] = len(self.violations)
        if instance_path:
            self.details["instance_path"] = instance_path


class ConstructionError(AuditViolationError):
    """Raised when an adversary transcript breaks a guarantee of its construction."""
    pass


class BudgetExceededError(SchedulingError):
    """Raised when an exact search is asked to go beyond its configured budget."""

    def __init__(self, message: str, budget: Optional[int] = None,
                 size: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize budget error with the budget and the requested size."""
        super().__init__(message, details)
        self.budget = budget
        self.size = size

        if budget is not None:
            self.details["budget"] = budget
        if size is not None:
            self.details["requested_size"] = size


class PrecisionExhaustedError(SchedulingError):
    """Raised when an adversary sequence does not terminate within max_steps."""

    def __init__(self, message: str, steps: Optional[int] = None,
                 precision_bits: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        """Initialize with the step limit and arithmetic precision in use."""
        super().__init__(message, details)
        self.steps = steps
        self.precision_bits = precision_bits

        if steps is not None:
            self.details["max_steps"] = steps
        if precision_bits is not None:
            self.details["precision_bits"] = precision_bits


# Exception mapping for CLI exit codes
EXCEPTION_EXIT_CODE_MAP = {
    BudgetExceededError: 3,
    PrecisionExhaustedError: 3,
    AuditViolationError: 2,
    SimulationFault: 2,
    InstanceError: 1,
    ConfigurationError: 1,
    InvalidQueryError: 1,
    SchedulingError: 1
}


def get_exit_code(exception: Exception) -> int:
    """Get the CLI exit code for an exception."""
    for exc_type, exit_code in EXCEPTION_EXIT_CODE_MAP.items():
        if isinstance(exception, exc_type):
            return exit_code
    return 1


def format_exception_report(exception: SchedulingError, command: Optional[str] = None) -> Dict[str, Any]:
    """Format exception as a standardized error record."""
    from datetime import datetime, timezone

    report = exception.to_dict()
    report["timestamp"] = datetime.now(timezone.utc).isoformat()

    if command:
        report["command"] = command

    return report
