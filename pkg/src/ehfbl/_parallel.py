"""Thread fan-out for independent Monte Carlo work items."""
import os
from concurrent.futures import ThreadPoolExecutor


def thread_count(threads=None) -> int:
    """Explicit argument, else ``EHFBL_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("EHFBL_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def chunked_map(fn, count: int, threads=None, chunk: int = 256) -> list:
    """Apply ``fn(start, stop)`` over ``range(count)`` in chunks.

    Results come back in chunk order regardless of completion order.
    """
    bounds = [(i, min(i + chunk, count)) for i in range(0, count, chunk)]
    workers = thread_count(threads)
    if workers == 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
