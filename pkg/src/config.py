"""
Configuration management for the deadline scheduling toolkit.
Handles environment-driven defaults for simulation, audits and search budgets.
"""

from enum import Enum
from pydantic_settings import BaseSettings
from pydantic import field_validator


class LogFormat(str, Enum):
    """Output formats for log records."""
    CONSOLE = "console"
    JSON = "json"


class Settings(BaseSettings):
    """Toolkit settings with environment overrides."""

    # Logging
    log_level: str = "INFO"
    log_format: LogFormat = LogFormat.CONSOLE

    # Arithmetic
    float_tolerance: float = 1e-9
    precision_bits: int = 53

    # Exact search budgets
    oracle_budget: int = 22
    exhaustive_max_jobs: int = 4
    exhaustive_max_horizon: int = 10

    # Algorithms and adversaries
    expcap_c: float = 0.9
    adversary_max_steps: int = 10000

    # Experiment execution
    max_workers: int = 1
    output_dir: str = "./results"

    @field_validator('log_level', mode='before')
    @classmethod
    def validate_log_level(cls, v):
        """Normalise the log level name."""
        if isinstance(v, str):
            return v.upper()
        return v

    @field_validator('log_format', mode='before')
    @classmethod
    def validate_log_format(cls, v):
        """Accept log format names case-insensitively."""
        if isinstance(v, str):
            return LogFormat(v.lower())
        return v

    @field_validator('expcap_c')
    @classmethod
    def validate_expcap_c(cls, v):
        """The exponential capacity constant must lie in (0, 1)."""
        if not 0.0 < v < 1.0:
            raise ValueError("EXPCAP_C must lie strictly between 0 and 1")
        return v

    @field_validator('precision_bits')
    @classmethod
    def validate_precision_bits(cls, v):
        """Reject mantissa widths below single precision."""
        if v < 24:
            raise ValueError("PRECISION_BITS must be at least 24")
        return v

    @field_validator('oracle_budget', 'exhaustive_max_jobs', 'exhaustive_max_horizon',
                     'adversary_max_steps', 'max_workers')
    @classmethod
    def validate_positive(cls, v):
        """Budgets and worker counts must be positive."""
        if v < 1:
            raise ValueError("budgets and worker counts must be positive")
        return v

    model_config = {
        "env_file": ".env",
        "case_sensitive": False,
        "extra": "ignore"
    }


# Global settings instance
settings = Settings()


def uses_json_logs() -> bool:
    """Check whether log records are emitted as JSON."""
    return settings.log_format == LogFormat.JSON


def is_double_precision(precision_bits: int) -> bool:
    """Check whether a precision request is served by native floats."""
    return precision_bits <= 53
