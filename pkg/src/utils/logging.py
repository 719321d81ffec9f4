"""
Structured logging configuration for the deadline scheduling toolkit.
Log records go to stderr so that stdout stays reserved for command results.
"""

import logging
import sys
import json
from datetime import datetime, timezone
from typing import Optional

from src.config import settings, uses_json_logs


_RESERVED_ATTRS = frozenset([
    "name", "msg", "args", "levelname", "levelno", "pathname",
    "filename", "module", "lineno", "funcName", "created", "msecs",
    "relativeCreated", "thread", "threadName", "processName", "taskName",
    "process", "exc_info", "exc_text", "stack_info", "getMessage", "message"
])


class StructuredFormatter(logging.Formatter):
    """Formatter emitting one JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as structured JSON."""

        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        # Fields passed through extra=
        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS:
                log_entry[key] = value

        return json.dumps(log_entry, ensure_ascii=False, default=str)


class ConsoleFormatter(logging.Formatter):
    """Colorized formatter for interactive runs."""

    COLORS = {
        'DEBUG': '\033[36m',     # Cyan
        'INFO': '\033[32m',      # Green
        'WARNING': '\033[33m',   # Yellow
        'ERROR': '\033[31m',     # Red
        'CRITICAL': '\033[35m',  # Magenta
        'RESET': '\033[0m'
    }

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with colors and trailing key=value extras."""

        color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset = self.COLORS['RESET']

        timestamp = datetime.fromtimestamp(record.created).strftime("%H:%M:%S.%f")[:-3]

        message = f"{color}[{timestamp}] {record.levelname:8s}{reset} "
        message += f"{record.name:16s} {record.getMessage()}"

        extras = [
            f"{key}={value}" for key, value in record.__dict__.items()
            if key not in _RESERVED_ATTRS
        ]
        if extras:
            message += " " + " ".join(extras)

        if record.exc_info:
            message += "\n" + self.formatException(record.exc_info)

        return message


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the toolkit logger; `level` overrides the configured level."""

    app_logger = logging.getLogger("deadline_sched")
    app_logger.handlers.clear()
    app_logger.propagate = False

    level_name = (level or settings.log_level).upper()
    log_level = getattr(logging, level_name, logging.INFO)
    app_logger.setLevel(log_level)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(log_level)

    if uses_json_logs():
        formatter: logging.Formatter = StructuredFormatter()
    else:
        formatter = ConsoleFormatter()

    handler.setFormatter(formatter)
    app_logger.addHandler(handler)

    app_logger.debug(f"Logging configured - Level: {level_name}, Format: {settings.log_format.value}")


# Application logger instance
logger = logging.getLogger("deadline_sched")


def log_simulation(policy: str, jobs: int, horizon: int, gain: float, **kwargs) -> None:
    """Log a finished simulation run."""

    log_data = {
        "policy": policy,
        "job_count": jobs,
        "horizon": horizon,
        "gain": gain,
        **kwargs
    }

    logger.debug("Simulation finished", extra=log_data)


def log_audit_result(audit: str, targets: int, violations: int, **kwargs) -> None:
    """Log the outcome of a charging audit."""

    log_data = {
        "audit": audit,
        "target_count": targets,
        "violation_count": violations,
        **kwargs
    }

    if violations:
        logger.warning("Audit found violations", extra=log_data)
    else:
        logger.info("Audit passed", extra=log_data)


def log_adversary_run(construction: str, steps: int, ratio: float, **kwargs) -> None:
    """Log an adversary transcript summary."""

    log_data = {
        "construction": construction,
        "steps": steps,
        "ratio": ratio,
        **kwargs
    }

    logger.info("Adversary run completed", extra=log_data)


def log_suite_progress(suite: str, done: int, total: int, **kwargs) -> None:
    """Log progress of an experiment suite."""

    log_data = {
        "suite": suite,
        "instances_done": done,
        "instances_total": total,
        "progress_percentage": int(100 * done / total) if total else 100,
        **kwargs
    }

    logger.debug("Suite progress update", extra=log_data)
