"""Deterministic random-stream derivation.

Every stochastic operation in the engine draws from a generator derived
from (seed, *path), where the path encodes what the stream is for
(generation index, child index, a purpose tag, ...).  Two processes that
derive the same path get bit-identical streams, which is what makes
parallel breeding and log replay reproduce byte-identical results.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep unrelated streams from colliding on the same path.
STREAM_CHILD = 0
STREAM_FALLBACK = 1
STREAM_ORACLE = 2
STREAM_RUN = 3


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for (seed, path)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def child_stream(seed: int, generation_index: int, child_index: int) -> np.random.Generator:
    """Stream used to breed one child of one generation."""
    return stream(seed, STREAM_CHILD, generation_index, child_index)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a sub-seed (for nested runs in an experiment batch)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
