from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from django.conf import settings

T = TypeVar("T")
R = TypeVar("R")


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        threads = getattr(settings, "SPLAT_THREADS", 1)
    return max(1, int(threads))


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map ``func`` over ``items`` on a thread pool, returning results in input order.

    Callers reduce the returned list sequentially, so sums do not depend on the worker count.
    """
    items = list(items)
    workers = min(worker_count(threads), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
