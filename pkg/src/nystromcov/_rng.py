"""Seedable counter-based RNG substreams.

Every stochastic routine in the package derives its randomness from
``substream(seed, *path)`` so that grid cells, trials, and regions can be
computed in any order (or on any worker) and still reproduce bit-identically.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox generator keyed by (seed, *path)."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    keys = [seed] + [int(q) for q in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(keys)))


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed, None, or an existing Generator to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng()
    return substream(seed)
