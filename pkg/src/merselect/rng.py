"""Portable seeded randomness.

All shuffles that define data partitions (train/validation splits, k-fold
plans) use SplitMix64 with a Fisher-Yates pass so that the same seed gives the
same partition in any language. Bulk random draws (bootstrap samples, synthetic
data, permutation shuffles) use numpy's PCG64 seeded from :func:`derive_seed`.

SplitMix64 (Steele, Lea & Flood, 2014)::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

Bounded draws use the multiply-shift map ``(x * bound) >> 64``.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        return (self.next() * bound) >> 64


def fisher_yates(n: int, seed: int) -> np.ndarray:
    """Permutation of ``range(n)`` by a backward Fisher-Yates pass."""
    perm = list(range(n))
    gen = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = gen.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & MASK64
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(seed: int, *path) -> int:
    """Child seed for a named sub-task, e.g. ``derive_seed(s, "tree", 7)``.

    The result is a 63-bit non-negative integer, valid for numpy and JSON.
    """
    state = mix64(int(seed) & MASK64)
    for key in path:
        state = mix64(state ^ mix64(_key_to_int(key) + GOLDEN))
    return state >> 1


def numpy_rng(seed: int, *path) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *path)))
