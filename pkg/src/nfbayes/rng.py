"""Reproducible RNG streams built on Philox counter-based generators.

Every sampler takes an explicit ``np.random.Generator``.  Streams derived
from the same seed but different ids are statistically independent; the
same (seed, stream id) always reproduces the identical draw sequence.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a generator for the given seed and (possibly nested) stream id."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))
