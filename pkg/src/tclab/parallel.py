"""Ordered thread-pool map over numba kernels that release the GIL."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "TCLAB_THREADS"


def resolve_threads(threads=None) -> int:
    """Explicit value, then ``TCLAB_THREADS``, then the CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def pmap(fn, items, threads=None):
    """``[fn(item) for item in items]`` spread over a thread pool.

    Results come back in input order, and each item is computed by the
    same sequential code whatever the pool size, so output does not depend
    on ``threads``.
    """
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def chunks(n, parts):
    """Split ``range(n)`` into at most ``parts`` contiguous (start, stop) pairs."""
    parts = max(1, min(parts, n))
    bounds = [n * i // parts for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]
