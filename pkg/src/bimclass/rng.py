"""Seed derivation helpers.

Every random decision in the package flows from one 64-bit master seed.
Sub-seeds for groups, trials, folds, epochs etc. are derived with a
splitmix64-style mixer so results never depend on scheduling order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step (Steele et al. finalizer)."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(base: int, *parts: int) -> int:
    """Fold integer parts into `base`, XOR-then-scramble per part."""
    s = base & _MASK64
    for p in parts:
        s = splitmix64(s ^ ((p * _GOLDEN) & _MASK64))
    return s


def make_rng(base: int, *parts: int) -> np.random.Generator:
    """PCG64 generator seeded from mix_seed(base, *parts)."""
    return np.random.default_rng(mix_seed(base, *parts))
