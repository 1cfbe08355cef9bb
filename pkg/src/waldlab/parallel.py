"""Deterministic fan-out of independent tasks over worker processes."""
from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "WALDLAB_WORKERS"


def default_workers() -> int:
    """Worker count from ``WALDLAB_WORKERS`` if set, else the number of CPUs."""
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def pmap(fn, arg_tuples, workers: int = 1) -> list:
    """``[fn(*args) for args in arg_tuples]``, possibly computed in parallel; order is preserved."""
    arg_tuples = list(arg_tuples)
    if workers <= 1 or len(arg_tuples) <= 1:
        return [fn(*a) for a in arg_tuples]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(workers, len(arg_tuples)), mp_context=ctx) as ex:
        return list(ex.map(fn, *zip(*arg_tuples)))
