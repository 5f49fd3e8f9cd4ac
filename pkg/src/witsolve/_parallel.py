from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import os


def thread_count(requested: int | None = None) -> int:
    """Worker count from ``requested`` or ``WITSOLVE_THREADS`` (0 = auto)."""
    if requested is None:
        raw = os.environ.get("WITSOLVE_THREADS", "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"WITSOLVE_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError("thread count must be >= 0")
    if requested == 0:
        requested = os.cpu_count() or 1
    return requested


def ordered_map(fn, items, workers: int | None = None) -> list:
    """Map ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    n = min(thread_count(workers), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
