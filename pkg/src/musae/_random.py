"""Counter-based random streams usable inside numba kernels.

Every walk and every training chunk owns a stream derived from
(global seed, ordinal), so results do not depend on how work is scheduled.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(nogil=True, cache=True)
def derive_state(seed, ordinal):
    """64-bit stream state for the ``ordinal``-th consumer of ``seed``."""
    a = _mix(np.uint64(seed) + _GOLDEN)
    return _mix(a ^ (np.uint64(ordinal) * _GOLDEN + _GOLDEN))


@njit(inline="always")
def next_u64(state):
    """Advance a splitmix64 stream. Returns (new_state, output)."""
    state = state + _GOLDEN
    return state, _mix(state)


@njit(inline="always")
def next_float(state):
    """Uniform double in [0, 1)."""
    state, x = next_u64(state)
    return state, float(x >> _S11) * _INV53


@njit(inline="always")
def next_below(state, bound):
    """Uniform integer in [0, bound)."""
    state, u = next_float(state)
    k = int(u * bound)
    if k >= bound:
        k = bound - 1
    return state, k

