"""Pinned, splittable random streams.

Every stream is numpy's Philox4x64-10 counter-based generator keyed with
``seed + (stream << 64)``, so stream ``k`` of seed ``s`` is reproducible on any
platform and independent of how many streams are consumed concurrently.
Variates are drawn through :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return np.random.Generator(np.random.Philox(key=seed | (int(index) << 64)))
