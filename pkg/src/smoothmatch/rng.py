"""Seeded, splittable random streams.

Every sampler in the package takes an explicit ``numpy.random.Generator``.
Streams are built on the counter-based Philox generator keyed by
``(seed, stream_id)``, so each pair yields an independent stream that is
bitwise reproducible regardless of how many other streams were consumed.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent reproducible generator for the given (seed, stream) pair."""
    if seed < 0 or stream_id < 0:
        raise ValueError("seed and stream_id must be nonnegative")
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
