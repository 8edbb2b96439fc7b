"""Order preserving thread map.

Results always come back in input order, so the thread count never
changes any output downstream.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads():
    return min(32, os.cpu_count() or 1)


def parallel_map(function, items, threads=None):
    items = list(items)
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(function, items))
