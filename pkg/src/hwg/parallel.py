"""Deterministic fiber-parallel map controlled by the HWG_THREADS variable."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HWG_THREADS", "1")))
    except ValueError:
        return 1


def fiber_map(fn, items):
    """``[fn(x) for x in items]``; results are always returned in input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
