"""
CLI command handlers.
Each module registers one subcommand and exposes a `run(args, out)` handler
returning the process exit code.
"""

from pathlib import Path
from typing import TextIO

from src.models.domain import Instance
from src.utils.exceptions import InstanceError


def load_instance(path: str) -> Instance:
    """Read an instance file, reporting a missing file as an input error."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InstanceError(f"cannot read instance file {path}: {e.strerror}") from None
    return Instance.from_text(text)


def emit(out: TextIO, text: str) -> None:
    """Write text to the command output, ending with exactly one newline."""
    out.write(text if text.endswith("\n") else text + "\n")
