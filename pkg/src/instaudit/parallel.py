"""Thread fan-out whose results always come back in input order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count(requested: int | None = None) -> int:
    """Resolve a worker count; ``AUDIT_THREADS`` caps it (0 means auto)."""
    if requested is None:
        try:
            requested = int(os.environ.get("AUDIT_THREADS", "1"))
        except ValueError:
            requested = 1
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, requested)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    items = list(items)
    n = min(thread_count(threads), len(items) or 1)
    if n == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
