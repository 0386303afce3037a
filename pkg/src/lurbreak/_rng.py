"""Counter-based random streams keyed by (seed, stream indices).

Every simulator draws from ``make_rng(seed, *stream)`` so that replication
``r`` of an experiment can be regenerated on its own, in any order, on any
worker.
"""

from __future__ import annotations

import numpy as np

RNG_NAME = "philox4x64"
RNG_VERSION = 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    keys = [RNG_VERSION, int(seed), *(int(s) for s in stream)]
    if any(k < 0 for k in keys):
        raise ValueError("seed and stream indices must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(keys)))


def rng_tag() -> str:
    return f"{RNG_NAME}-v{RNG_VERSION}"
