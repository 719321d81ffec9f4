"""
Shared test configuration for the deadline scheduling toolkit.
Provides settings, scratch directories and small hand-checked instances.
"""

import shutil
import tempfile
from pathlib import Path

import pytest
from hypothesis import strategies as st

from src.models.domain import Instance, Job, Trace, Unit


# Essential Test Configuration
@pytest.fixture(scope="session")
def test_settings():
    """Settings with debug logging and a small oracle budget."""
    from src.config import LogFormat, Settings
    return Settings(
        log_level="DEBUG",
        log_format=LogFormat.CONSOLE,
        oracle_budget=16,
        output_dir="./test_results"
    )


# Temporary Directory for File Operations
@pytest.fixture
def temp_dir() -> Path:
    """Temporary directory for instance files and suite output."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


# Sample Instances
@pytest.fixture
def single_job() -> Instance:
    """One tight job of length 2."""
    return Instance(jobs=[Job(id=0, r=0, p=2, d=2, w=1.0)], k=2)


@pytest.fixture
def smith_two_job() -> Instance:
    """Long job a (p = d = w = 4) and short job b (p = 1, d = 5, w = 1.01)."""
    return Instance(
        jobs=[
            Job(id=0, r=0, p=4, d=4, w=4.0),
            Job(id=1, r=0, p=1, d=5, w=1.01),
        ],
        k=4
    )


@pytest.fixture
def preemption_instance() -> Instance:
    """Both jobs fit only if the first is preempted at slot 1."""
    return Instance(
        jobs=[
            Job(id=0, r=0, p=2, d=4, w=1.0),
            Job(id=1, r=1, p=1, d=2, w=1.0),
        ],
        k=2
    )


@pytest.fixture
def sample_instance_text() -> str:
    """Instance file with a comment and a blank line."""
    return """# two jobs
k 4 equal 0
0 0 4 4 4

1 0 1 5 1.01
"""


@pytest.fixture
def sample_trace_text() -> str:
    """Trace of the static Smith rule on the two-job instance."""
    return """t 0 job 1 rem 1
complete 1 at 1
"""


@pytest.fixture
def instance_file(temp_dir, sample_instance_text) -> Path:
    path = temp_dir / "two_job.txt"
    path.write_text(sample_instance_text)
    return path


# Hypothesis strategies
@st.composite
def instances(draw, max_jobs: int = 5, max_k: int = 3, max_release: int = 5, max_slack: int = 3,
              equal_lengths: bool = False) -> Instance:
    """Small random instances with integer weights."""
    k = draw(st.integers(min_value=1, max_value=max_k))
    if equal_lengths:
        k = max(k, 2)
    n = draw(st.integers(min_value=0, max_value=max_jobs))
    jobs = []
    for job_id in range(n):
        r = draw(st.integers(min_value=0, max_value=max_release))
        p = k if equal_lengths else draw(st.integers(min_value=1, max_value=k))
        d = r + p + draw(st.integers(min_value=0, max_value=max_slack))
        w = float(draw(st.integers(min_value=1, max_value=9)))
        jobs.append(Job(id=job_id, r=r, p=p, d=d, w=w))
    return Instance(jobs=jobs, k=k, equal_lengths=equal_lengths)


@st.composite
def instances_with_traces(draw, max_length: int = 12):
    """Random instances with arbitrary, possibly malformed, traces."""
    instance = draw(instances(max_jobs=4, max_k=3))
    ids = instance.ids or [0]
    units = st.builds(Unit, job=st.sampled_from(ids), a=st.integers(min_value=1, max_value=instance.k))
    slots = draw(st.lists(st.none() | units, max_size=max_length))
    return instance, Trace(slots=slots)
