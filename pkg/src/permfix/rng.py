"""Counter-based random streams (Philox4x64-10).

A stream is identified by ``(seed, stream_id)``, used as the two 64-bit
Philox key words.  Output block ``b`` of a stream is the Philox permutation
of the counter ``(b, 0, 0, 0)``, so any word of any stream can be computed
without touching the others.  The sampling kernels use one stream per
sample, which makes every estimator a pure function of ``(seed, samples)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1

# state layout: key0, key1, next block index, buffer position, buffer[4]
STATE_SIZE = 8


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * b


@nb.njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True)
def stream_init(state, seed, stream_id):
    state[0] = seed
    state[1] = stream_id
    state[2] = np.uint64(0)
    state[3] = np.uint64(4)


@nb.njit(cache=True)
def next_u64(state):
    pos = state[3]
    if pos >= 4:
        o0, o1, o2, o3 = philox4x64(state[2], np.uint64(0), np.uint64(0), np.uint64(0),
                                    state[0], state[1])
        state[4] = o0
        state[5] = o1
        state[6] = o2
        state[7] = o3
        state[2] = state[2] + np.uint64(1)
        pos = np.uint64(0)
    state[3] = pos + np.uint64(1)
    return state[4 + pos]


@nb.njit(cache=True)
def next_double(state):
    """Uniform on [0, 1) with 53 random bits."""
    return (next_u64(state) >> _S11) * _TWO_M53


@nb.njit(cache=True)
def next_below(state, m):
    """Uniform integer on {0, ..., m-1}, exact for 1 <= m <= 2**32 (Lemire)."""
    mm = np.uint64(m)
    x = next_u64(state) & _LO32
    prod = x * mm
    low = prod & _LO32
    if low < mm:
        thresh = ((_LO32 + np.uint64(1)) - mm) % mm
        while low < thresh:
            x = next_u64(state) & _LO32
            prod = x * mm
            low = prod & _LO32
    return np.int64(prod >> _S32)


@dataclass
class RngStream:
    """One Philox stream, fully determined by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0
    _state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.seed &= MASK64
        self.stream_id &= MASK64
        self._state = np.zeros(STATE_SIZE, dtype=np.uint64)
        stream_init(self._state, np.uint64(self.seed), np.uint64(self.stream_id))

    @property
    def state(self) -> np.ndarray:
        return self._state

    def u64(self) -> int:
        return int(next_u64(self._state))

    def random(self) -> float:
        return float(next_double(self._state))

    def below(self, m: int) -> int:
        if not 1 <= m <= 1 << 32:
            raise ValueError(f"m must lie in [1, 2**32], got {m}")
        return int(next_below(self._state, m))
