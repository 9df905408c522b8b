"""Reproducible random streams.

Every stream is identified by a ``(seed, stream_id)`` pair of unsigned 64-bit
integers.  The pair is mixed through SplitMix64 into the 256-bit state of a
xoshiro256** generator, so the raw 64-bit output of a stream is fully
determined by the pair and can be reproduced bit for bit by any other
implementation of the two published algorithms.

Derived quantities:

* uniform doubles use the top 53 bits: ``(x >> 11) * 2**-53``;
* standard normals use the Box-Muller transform on consecutive pairs of
  uniforms (always two uniforms per two normals, no rejection), so the number
  of raw words consumed per call is a pure function of the request size.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    """SplitMix64 finalizer (a bijection on 64-bit integers)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_sequence(state: int, count: int) -> list[int]:
    """First ``count`` outputs of SplitMix64 started from ``state``."""
    out = []
    for _ in range(count):
        state = (state + GOLDEN) & MASK64
        out.append(splitmix64_mix(state))
    return out


def derive_state(seed: int, stream_id: int) -> np.ndarray:
    """xoshiro256** state for the pair ``(seed, stream_id)``.

    The SplitMix64 start value is ``seed XOR mix(stream_id + GOLDEN)``; since
    ``mix`` is a bijection, distinct stream ids under one seed never share a
    start value.
    """
    seed &= MASK64
    stream_id &= MASK64
    start = seed ^ splitmix64_mix((stream_id + GOLDEN) & MASK64)
    words = splitmix64_sequence(start, 4)
    if not any(words):  # all-zero state is a fixed point of xoshiro
        words[0] = GOLDEN
    return np.array(words, dtype=np.uint64)


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def _fill_u64(s, out):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    for i in range(out.shape[0]):
        out[i] = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3


@njit(cache=True)
def _fill_uniform(s, out):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    scale = 1.0 / 9007199254740992.0
    for i in range(out.shape[0]):
        r = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        out[i] = float(r >> np.uint64(11)) * scale
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3


@njit(cache=True)
def _box_muller(u, out):
    two_pi = 2.0 * np.pi
    for i in range(out.shape[0] // 2):
        r = np.sqrt(-2.0 * np.log(1.0 - u[2 * i]))
        th = two_pi * u[2 * i + 1]
        out[2 * i] = r * np.cos(th)
        out[2 * i + 1] = r * np.sin(th)


class RngStream:
    """A single-owner random stream keyed by ``(seed, stream_id)``.

    Not thread safe: give each task its own stream (see :meth:`child`).
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        self._state = derive_state(self.seed, self.stream_id)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def child(self, key: int) -> "RngStream":
        """Independent stream for sub-task ``key`` under the same seed."""
        sid = splitmix64_mix(self.stream_id ^ splitmix64_mix((int(key) + 1) * GOLDEN))
        return RngStream(self.seed, sid)

    def u64(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.uint64)
        _fill_u64(self._state, out)
        return out

    def random(self, size=None):
        """Uniform doubles on [0, 1)."""
        if size is None:
            return float(self.random(1)[0])
        shape = (size,) if np.isscalar(size) else tuple(size)
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        _fill_uniform(self._state, out)
        return out.reshape(shape)

    def uniform(self, low=0.0, high=1.0, size=None):
        return low + (high - low) * self.random(size)

    def normal(self, size=None):
        """Standard normal variates (Box-Muller)."""
        if size is None:
            return float(self.normal(1)[0])
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        m = n + (n & 1)
        u = np.empty(m, dtype=np.float64)
        _fill_uniform(self._state, u)
        out = np.empty(m, dtype=np.float64)
        _box_muller(u, out)
        return out[:n].reshape(shape)

    def integers(self, high: int, size=None):
        """Integers in ``[0, high)`` via ``floor(u * high)``."""
        if size is None:
            return int(self.integers(high, 1)[0])
        u = self.random(size)
        return np.minimum(np.floor(u * high), high - 1).astype(np.int64)
