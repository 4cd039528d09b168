"""SplitMix64 counter-based uniforms.

Every uniform is a pure function of (seed, replicate, counter), so replicates
can be generated in any order or in parallel with identical results.
"""

import functools

import numpy as np

from .._backend import USE_NUMBA, jit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


def _scalar(fn):
    """jit on the numba backend; otherwise silence numpy's uint64 wraparound warnings."""
    if USE_NUMBA:
        return jit(fn)

    @functools.wraps(fn)
    def wrapped(*args):
        with np.errstate(over="ignore"):
            return fn(*args)

    return wrapped


@_scalar
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@_scalar
def stream_key(seed, rep):
    return mix64(mix64(np.uint64(seed)) + np.uint64(rep) * GOLDEN)


@_scalar
def uniform(key, counter):
    """Uniform on the open interval (0, 1)."""
    x = mix64(np.uint64(key) + (np.uint64(counter) + np.uint64(1)) * GOLDEN)
    return (np.float64(x >> _S11) + 0.5) * _TWO_M53


# vectorised counterparts used by the numpy backend; uint64 arrays wrap silently

def mix64_array(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_keys(seed, reps):
    reps = np.asarray(reps, dtype=np.uint64)
    s = mix64_array(np.array([seed], dtype=np.uint64))
    return mix64_array(s + reps * GOLDEN)


def uniforms(keys, counters):
    c = np.asarray(counters, dtype=np.uint64)
    x = mix64_array(keys + (c + np.uint64(1)) * GOLDEN)
    return ((x >> _S11).astype(np.float64) + 0.5) * _TWO_M53
