from concurrent.futures import ThreadPoolExecutor
from app.utils.constants import DEFAULT_THREADS
from typing import Callable, Sequence, TypeVar
import logging
import os


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Worker cap from FROD_THREADS, falling back to the hardware count."""
    raw = os.getenv("FROD_THREADS")
    if not raw:
        return DEFAULT_THREADS
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer FROD_THREADS=%r", raw)
        return DEFAULT_THREADS
    return max(1, value)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """Map `fn` over `items`, returning results in input order.

    With a single worker the map runs inline, so serial and parallel runs share
    one code path for the results' ordering.
    """
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
