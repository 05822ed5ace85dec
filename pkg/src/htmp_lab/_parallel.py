"""Order-preserving thread map whose results do not depend on worker count."""
from concurrent.futures import ThreadPoolExecutor
import os

ENV_THREADS = "HTMP_LAB_THREADS"


def worker_count(default=1):
    raw = os.environ.get(ENV_THREADS, "")
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


def pmap(fn, items, workers=None):
    """``list(map(fn, items))`` run on up to ``workers`` threads.

    Every item must carry its own random stream, so the output is identical
    for any worker count.
    """
    items = list(items)
    n = worker_count() if workers is None else max(1, int(workers))
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
