"""Seeded random streams.

A stream is a plain ``numpy.random.Generator``; this module only fixes how
``(seed, stream_id)`` pairs map to independent generators so that every run is
reproducible regardless of how work is split across workers.
"""
from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator


def make_stream(seed: int, stream_id: int = 0, chunk: int | None = None) -> RandomStream:
    """Independent PCG64 generator for ``(seed, stream_id)``, optionally a numbered chunk of it.

    Work split into chunks draws each chunk from its own generator, so the
    result does not depend on how chunks are distributed over processes.
    """
    if seed < 0 or stream_id < 0 or (chunk is not None and chunk < 0):
        raise ValueError("seed, stream_id and chunk must be nonnegative")
    key = (int(stream_id),) if chunk is None else (int(stream_id), int(chunk))
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def uniform_open_left(rng: RandomStream, size=None):
    """Uniform draws on (0, 1]."""
    return 1.0 - rng.random(size)
