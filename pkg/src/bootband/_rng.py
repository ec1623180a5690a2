"""Deterministic random-stream derivation.

Every stochastic component draws from a PCG64 generator keyed by
``(seed, *stream_key)`` through :class:`numpy.random.SeedSequence`, whose
mixing is stable across platforms and numpy releases.  Two calls with the
same key always yield bit-identical streams, and distinct keys yield
statistically independent streams, so replicates can run in any order
(or in parallel) without changing results.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *stream_key: int) -> np.random.Generator:
    """Return the generator for sub-stream ``stream_key`` of ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *stream_key))))


def derive_seed(seed: int, *stream_key: int) -> int:
    """Derive a 64-bit child seed, for components that take a seed of their own."""
    ss = np.random.SeedSequence((seed, *stream_key))
    words = ss.generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
