"""Deterministic randomness primitives.

All stochastic behaviour in the toolkit is driven by splitmix64, a published
xorshift-family generator with a 64-bit counter state. The generator is pure
integer arithmetic plus IEEE doubles, so shuffles and sampled values are
bit-identical across platforms and library versions. Independent streams are
derived by hashing a root seed together with string tokens (blake2b), which
lets every sample own its own stream regardless of iteration order.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 stream for shuffles and bounded draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_uint64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(root_seed: int, *tokens: str) -> int:
    """Derive an independent 64-bit stream seed from a root seed and tokens."""
    key = (root_seed & _MASK).to_bytes(8, "little")
    h = hashlib.blake2b(digest_size=8, key=key)
    for token in tokens:
        h.update(token.encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def uniforms(seed: int, n: int) -> np.ndarray:
    """n doubles in (0, 1], identical to the sequential stream's outputs."""
    counters = (np.uint64(seed) + np.uint64(_GOLDEN) * np.arange(1, n + 1, dtype=np.uint64))
    z = counters
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    # 53-bit mantissa shifted into (0, 1]; never 0 so log() below is safe
    return ((z >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0 ** -53)


def normals(seed: int, n: int) -> np.ndarray:
    """n standard normal deviates via Box-Muller on the uniform stream."""
    m = (n + 1) // 2
    u = uniforms(seed, 2 * m)
    r = np.sqrt(-2.0 * np.log(u[:m]))
    theta = (2.0 * math.pi) * u[m:]
    out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
    return out[:n]
