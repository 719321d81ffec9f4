"""
Background execution of suite tasks.
Runs tasks in-process or on a process pool, depending on the configured
worker count, and always hands results back in task order.
"""

import concurrent.futures as cf
from abc import ABC, abstractmethod
from typing import Callable, Dict, Iterator, List, Optional, Sequence, TypeVar

from src.config import settings
from src.utils.logging import logger

T = TypeVar("T")
R = TypeVar("R")


class TaskExecutor(ABC):
    """Abstract base class for task executors."""

    @abstractmethod
    def run(self, tasks: Sequence[T], handler: Callable[[T], R]) -> Iterator[R]:
        """Apply handler to every task, yielding results in task order."""
        pass


class LocalExecutor(TaskExecutor):
    """Runs every task in the calling process."""

    def run(self, tasks: Sequence[T], handler: Callable[[T], R]) -> Iterator[R]:
        for task in tasks:
            yield handler(task)


class PoolExecutor(TaskExecutor):
    """Runs tasks on a process pool and reorders results as they complete."""

    def __init__(self, max_workers: int):
        self.max_workers = max_workers
        logger.info("Initialized process pool executor", extra={"max_workers": max_workers})

    def run(self, tasks: Sequence[T], handler: Callable[[T], R]) -> Iterator[R]:
        results: Dict[int, R] = {}
        next_index = 0

        with cf.ProcessPoolExecutor(max_workers=self.max_workers) as pool:
            futures = {pool.submit(handler, task): index for index, task in enumerate(tasks)}
            for future in cf.as_completed(futures):
                index = futures[future]
                try:
                    results[index] = future.result()
                except Exception as e:
                    logger.error(f"Task {index} failed: {e}", exc_info=True)
                    for pending in futures:
                        pending.cancel()
                    raise

                while next_index in results:
                    yield results.pop(next_index)
                    next_index += 1


def get_executor(max_workers: Optional[int] = None) -> TaskExecutor:
    """Executor for the requested worker count; one worker means in-process."""
    workers = settings.max_workers if max_workers is None else max_workers
    if workers <= 1:
        return LocalExecutor()
    return PoolExecutor(workers)


def execute_tasks(tasks: List[T], handler: Callable[[T], R], max_workers: Optional[int] = None) -> Iterator[R]:
    """Run tasks with the configured executor; results come back in task order."""
    return get_executor(max_workers).run(tasks, handler)
