"""
Ordered thread-pool map used for independent trials and scan points.
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Iterable, List, Optional, TypeVar

from app.core.config import TREG_CONFIG

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item and return the results in input order.

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker threads; None uses the configured default, <= 1 runs inline

    Returns:
        [fn(item) for item in items], independent of the thread count
    """
    items = list(items)
    if threads is None:
        threads = TREG_CONFIG["parallel"]["default_threads"]
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    results: List[Optional[R]] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        futures = {executor.submit(fn, item): index for index, item in enumerate(items)}
        for future in as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"Work item {index} failed: {e}")
                raise
    return results
