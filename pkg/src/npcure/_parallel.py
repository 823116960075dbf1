"""Ordered map over independent tasks with an optional process pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "NPCURE_WORKERS"


def resolve_workers(workers=None) -> int:
    """Explicit argument wins, then ``$NPCURE_WORKERS``, then 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else 1
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def ordered_map(func, items, workers=None):
    """``[func(item) for item in items]``, possibly computed in parallel.

    Results come back in input order, so any reduction over them is
    independent of scheduling.
    """
    items = list(items)
    workers = min(resolve_workers(workers), max(len(items), 1))
    if workers == 1:
        return [func(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))
