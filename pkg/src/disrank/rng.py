"""Deterministic random generator (splitmix64) used wherever the toolkit
needs randomness: dataset splits, weight init, batch shuffling, dropout masks.

The point is cross-platform reproducibility: the same seed must produce the
same bytes on any machine and any library version, so nothing here depends on
an environment-default RNG. splitmix64 advances its state by a fixed additive
constant, which makes bulk generation vectorizable (state after k steps is
``s0 + k * GAMMA``).
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, salt: int) -> int:
    """Derive an independent stream seed; injective in ``seed`` for fixed salt."""
    return mix64((seed ^ (salt * GAMMA)) & MASK64)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Sequential splitmix64 stream with vectorized bulk draws."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + GAMMA) & MASK64
        return mix64(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound). Modulo bias is irrelevant here."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_uint64() % bound

    def uniform(self, shape) -> np.ndarray:
        """Array of uniforms in [0, 1); consumes the same stream as next_float."""
        n = int(np.prod(shape))
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GAMMA)
        steps += np.uint64(self._state)
        self._state = (self._state + n * GAMMA) & MASK64
        bits = _mix_array(steps) >> np.uint64(11)
        return (bits * 2.0**-53).reshape(shape)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        self.shuffle(idx)
        return np.array(idx, dtype=np.intp)
