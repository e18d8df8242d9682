"""Counter-based seed derivation.

A run has one 64-bit master seed.  Trial ``i`` gets its own generator keyed
by ``mix64(master, i)``, so any trial can be reproduced in isolation and the
results do not depend on how trials are spread over workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser; a bijection on 64-bit integers."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for trial ``index``; distinct indices give distinct seeds."""
    base = splitmix64(int(master_seed) & MASK64)
    return splitmix64((base + (int(index) & MASK64) * _GOLDEN) & MASK64)


def make_rng(seed) -> np.random.Generator:
    """Generator from an int seed, or pass an existing generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("a seed is required for reproducible sampling")
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return make_rng(derive_seed(master_seed, index))
