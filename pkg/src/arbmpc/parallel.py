"""Thread fan-out for per-seed work. Results are always merged in input order."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_THREADS = 1


def set_threads(k):
    global _THREADS
    _THREADS = max(1, int(k))


def get_threads():
    return _THREADS


def ordered_map(fn, items):
    items = list(items)
    if _THREADS <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_THREADS) as ex:
        return list(ex.map(fn, items))
