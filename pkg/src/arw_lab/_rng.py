"""Counter-based Philox4x64-10 generator, compiled with numba.

Every random quantity in the package is a pure function of a 64-bit key and
a counter, so values can be addressed directly instead of drawn from a stream.
Blocks match ``numpy.random.Philox`` (same constants and round schedule).
"""
import numpy as np
from numba import njit, uint64

_M0 = uint64(0xD2E7470EE14C6C93)
_M1 = uint64(0xCA5A826395121157)
_W0 = uint64(0x9E3779B97F4A7C15)
_W1 = uint64(0xBB67AE8584CAA73B)
_LO32 = uint64(0xFFFFFFFF)
_S32 = uint64(32)
_S11 = uint64(11)

# stream tags used as the second key word
STREAM_TAPE = 0
STREAM_CONFIG = 1
STREAM_ORDER = 2
STREAM_TRIAL = 3
STREAM_WALK = 4

MASK64 = (1 << 64) - 1


@njit(cache=True, inline="always")
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


@njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    c0 = uint64(c0)
    c1 = uint64(c1)
    c2 = uint64(c2)
    c3 = uint64(c3)
    k0 = uint64(k0)
    k1 = uint64(k1)
    for r in range(10):
        if r > 0:
            k0 += _W0
            k1 += _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True)
def uniform(key, stream, a, b):
    """Uniform double in [0, 1) addressed by ``(key, stream)`` and counter ``(a, b)``."""
    w = philox4x64(a, b, 0, 0, key, stream)[0]
    return float(w >> _S11) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def derive(key, stream, a, b):
    """64-bit child key, e.g. the seed of trial ``a`` under master ``key``."""
    return philox4x64(a, b, 0, 0, key, stream)[0]


def as_key(seed):
    """Validate a user seed and return it as a numpy uint64."""
    seed = int(seed)
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return np.uint64(seed)


def child_seed(master_seed, index, stream=STREAM_TRIAL):
    """Seed of the ``index``-th trial derived from ``master_seed``."""
    return int(derive(as_key(master_seed), np.uint64(stream), np.uint64(index), np.uint64(0)))
