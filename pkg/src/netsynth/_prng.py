"""splitmix64 stream usable from numba kernels.

The state is a one-element uint64 array so kernels can advance it in place.
numpy's Generator is far too slow per draw for the walker inner loops.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


def new_state(seed):
    """Create a kernel PRNG state from any integer seed."""
    return np.array([np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)


@nb.njit(inline="always")
def next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def next_float(state):
    """Uniform float in [0, 1)."""
    return (next_u64(state) >> np.uint64(11)) * _INV53


@nb.njit(inline="always")
def next_below(state, k):
    """Uniform integer in [0, k)."""
    return np.int64(next_float(state) * k)
