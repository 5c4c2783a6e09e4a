import os
from concurrent.futures import ThreadPoolExecutor


def max_workers():
    try:
        return max(1, int(os.environ.get("AFREE_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map; runs on a thread pool capped by ``AFREE_THREADS`` (default 1)."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
