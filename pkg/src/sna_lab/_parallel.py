"""Deterministic chunked evaluation over independent work items."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "SNA_LAB_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Worker cap from the argument, else ``SNA_LAB_THREADS``; 0 means one per CPU."""
    if requested is None:
        raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, requested)


def chunk_bounds(n_items: int, n_chunks: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(n_chunks, n_items))
    edges = np.linspace(0, n_items, n_chunks + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:])]


def map_chunks(func, n_items: int, workers: int | None = None) -> list:
    """Call ``func(lo, hi)`` over a partition of ``range(n_items)``; results in order.

    Each chunk is computed independently, so the concatenated result does not
    depend on the number of workers.
    """
    workers = worker_count(workers)
    bounds = chunk_bounds(n_items, workers)
    if len(bounds) == 1:
        return [func(*bounds[0])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: func(*b), bounds))
