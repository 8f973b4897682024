"""Portable deterministic randomness and string hashing.

Every random choice in the pipeline flows from a single 64-bit seed through
the splitmix64 generator implemented here.  The generator is fully specified
by this file (no dependence on platform RNGs), so splits, shuffles, and model
initialisations reproduce bit-for-bit across machines and across
reimplementations in other languages.

Seed derivation: a component obtains its own stream via
``derive(seed, label)`` where ``label`` is a short ASCII path such as
``"downsample/Japanese"`` or ``"svm/shuffle"``.  The child seed is
``mix64(seed XOR fnv1a64(label))``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes | str) -> int:
    """FNV-1a 64-bit hash of bytes (strings are hashed as UTF-8)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanches a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive(seed: int, label: str) -> int:
    """Derive a child seed for a named component from a master seed."""
    return mix64((seed & _MASK64) ^ fnv1a64(label))


class SplitMix64:
    """Sequential splitmix64 stream with helpers for shuffling and floats."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        self.shuffle(idx)
        return np.asarray(idx, dtype=np.int64)

    def fill_uniform(self, shape, lo: float, hi: float) -> np.ndarray:
        """Vectorised uniform array; consumes len(flat) steps of the stream."""
        n = int(np.prod(shape))
        start = self._state
        counters = (np.uint64(start) + (np.arange(1, n + 1, dtype=np.uint64)) * np.uint64(_GAMMA))
        z = _mix64_array(counters)
        self._state = (start + n * _GAMMA) & _MASK64
        floats = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return (lo + (hi - lo) * floats).reshape(shape)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))
