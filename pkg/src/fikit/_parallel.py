"""Thread-pool map capped by ``FIKIT_THREADS``."""
from concurrent.futures import ThreadPoolExecutor
import os


def default_jobs():
    try:
        return max(1, int(os.environ.get("FIKIT_THREADS", "1")))
    except ValueError:
        return 1


def pmap(func, items, n_jobs=None):
    """Ordered map; results are independent of ``n_jobs``."""
    items = list(items)
    n_jobs = default_jobs() if n_jobs is None else max(1, int(n_jobs))
    if n_jobs == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, items))
