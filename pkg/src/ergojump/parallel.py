"""Replica fan-out over a fork pool with counter-derived per-replica seeds.

Each replica's seed derives from (root_seed, replica_id) alone, so results
are identical whatever the worker layout; merging is a plain ordered
concatenation of per-chunk lists.  The task callable is handed to workers
through a module global captured at fork time, so closures over model objects
work without pickling them.
"""

from __future__ import annotations

import multiprocessing
import os

from .core import replica_seed

_TASK = None


def _run_chunk(args):
    lo, hi, root = args
    fn = _TASK
    return [fn(r, replica_seed(root, r)) for r in range(lo, hi)]


def map_replicas(fn, replicas: int, root_seed: int, workers: int | None = 1):
    """Apply fn(replica_id, seed_sequence) for each replica; ordered results.

    workers=None uses all cores; results from worker processes must pickle.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or replicas < 256:
        return [fn(r, replica_seed(root_seed, r)) for r in range(replicas)]
    global _TASK
    _TASK = fn
    try:
        ctx = multiprocessing.get_context("fork")
        nchunks = min(replicas, workers * 8)
        bounds = [replicas * k // nchunks for k in range(nchunks + 1)]
        jobs = [
            (bounds[k], bounds[k + 1], root_seed)
            for k in range(nchunks)
            if bounds[k] < bounds[k + 1]
        ]
        with ctx.Pool(workers) as pool:
            parts = pool.map(_run_chunk, jobs)
    finally:
        _TASK = None
    return [item for part in parts for item in part]
