"""Optional process-level parallelism for independent sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

__all__ = ["worker_count", "pmap"]


def worker_count() -> int:
    """Worker cap from ``QUATDYN_THREADS`` (default 1, i.e. serial)."""
    raw = os.environ.get("QUATDYN_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def pmap(fn: Callable, items: Iterable) -> list:
    """Order-preserving map; runs in a process pool when more than one worker is allowed.

    ``fn`` must be picklable (a module-level function or a ``functools.partial`` of one).
    """
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
