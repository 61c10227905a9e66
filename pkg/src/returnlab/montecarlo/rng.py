"""Counter-based random streams for simulation kernels.

Every trial gets its own Philox4x64-10 stream keyed by ``(master_seed,
trial)``; the top counter word carries a stream id, so one trial can own
several independent walkers. The numba implementation below produces the
same bits as ``numpy.random.Philox(key=[master_seed, trial],
counter=[0, 0, 0, stream])``, and :func:`trial_generator` returns that numpy
generator for code that runs outside the kernels.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = 0xFFFFFFFFFFFFFFFF

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U4 = np.uint64(4)
_TO_DOUBLE = 1.0 / 9007199254740992.0

STATE_SIZE = 11  # counter[4], key[2], buffer[4], buffer position


@njit(cache=True, inline="always")
def _mulhilo(a, b):
    lo = a * b
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _MASK32) + (p2 & _MASK32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    return lo, hi


@njit(cache=True)
def philox_block(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 += _W0
            k1 += _W1
        lo0, hi0 = _mulhilo(_M0, c0)
        lo1, hi1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True)
def init_state(state, key0, key1, stream):
    state[0] = _U0
    state[1] = _U0
    state[2] = _U0
    state[3] = stream
    state[4] = key0
    state[5] = key1
    state[10] = _U4


def new_state(key0: int, key1: int, stream: int = 0) -> np.ndarray:
    state = np.zeros(STATE_SIZE, dtype=np.uint64)
    init_state(state, np.uint64(int(key0) & MASK64), np.uint64(int(key1) & MASK64),
               np.uint64(int(stream) & MASK64))
    return state


@njit(cache=True)
def next_u64(state):
    pos = state[10]
    if pos < _U4:
        state[10] = pos + _U1
        return state[6 + np.int64(pos)]
    state[0] += _U1
    if state[0] == _U0:
        state[1] += _U1
        if state[1] == _U0:
            state[2] += _U1
            if state[2] == _U0:
                state[3] += _U1
    b0, b1, b2, b3 = philox_block(state[0], state[1], state[2], state[3], state[4], state[5])
    state[6] = b0
    state[7] = b1
    state[8] = b2
    state[9] = b3
    state[10] = _U1
    return b0


@njit(cache=True)
def next_double(state):
    return np.float64(next_u64(state) >> _S11) * _TO_DOUBLE


@njit(cache=True)
def next_index(state, k):
    """Uniform integer in [0, k)."""
    return np.int64(next_double(state) * k)


def key_words(master_seed: int, trial: int) -> tuple[int, int]:
    return int(master_seed) & MASK64, int(trial) & MASK64


def trial_generator(master_seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """numpy Generator over the same bits a kernel sees for (seed, trial, stream)."""
    k0, k1 = key_words(master_seed, trial)
    return np.random.Generator(np.random.Philox(key=[k0, k1], counter=[0, 0, 0, int(stream)]))
