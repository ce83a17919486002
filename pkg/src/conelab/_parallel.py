"""Thread fan-out capped by the ``CONELAB_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker cap: ``CONELAB_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("CONELAB_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"CONELAB_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("CONELAB_THREADS must be nonnegative")
    return n or (os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """``[fn(i) for i in items]``, possibly on threads; order is preserved."""
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
