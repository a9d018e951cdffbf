"""
Work queue for independent experiment jobs.

Jobs fan out over a process pool and come back in submission order, so the
output of a run does not depend on the number of workers.
"""

import concurrent.futures
import logging
from typing import Callable, List, Optional, Sequence, TypeVar

from errors import UsageError

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def resolve_workers(requested: Optional[int] = None, fallback: int = 1) -> int:
    """Flag value if given, else the fallback from THREADS or 1."""
    workers = fallback if requested is None else requested
    if workers < 1:
        raise UsageError(f'Worker count must be >= 1, got {workers}')
    return workers


def run_jobs(func: Callable[[T], R], payloads: Sequence[T], workers: int = 1) -> List[R]:
    """
    Apply func to every payload and return the results in payload order.

    With one worker everything runs in this process. func and the payloads
    must be picklable otherwise. The first failing job re-raises its error
    once the pool has drained.
    """
    total = len(payloads)
    if workers <= 1 or total <= 1:
        results = []
        for index, payload in enumerate(payloads):
            results.append(func(payload))
            logger.info(f'Job {index + 1}/{total} done')
        return results

    slots: List[Optional[R]] = [None] * total
    with concurrent.futures.ProcessPoolExecutor(max_workers=min(workers, total)) as executor:
        futures = {executor.submit(func, payload): index for index, payload in enumerate(payloads)}
        done = 0
        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            slots[index] = future.result()
            done += 1
            logger.info(f'Job {index + 1}/{total} done ({done} finished)')
    return slots  # type: ignore[return-value]
