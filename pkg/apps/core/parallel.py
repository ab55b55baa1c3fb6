"""
Thread pool helper honouring IDM_ODDS_THREADS.

Results always come back in input order, so a computation gives the same
output whatever the degree of parallelism.
"""

from concurrent.futures import ThreadPoolExecutor
import logging
import os

from django.conf import settings

logger = logging.getLogger(__name__)


def worker_count():
    """Number of worker threads (IDM_ODDS_THREADS, 0 = one per CPU)."""
    configured = int(getattr(settings, "IDM_ODDS_THREADS", 0) or 0)
    if configured > 0:
        return configured
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """Map fn over items, concurrently when more than one worker is allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Evaluating {len(items)} items on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
