"""Log-domain first-jump recursions over the block-counting chain.

Jump weights enter through two tables, ``gb`` and ``ga``, with
``ln w_{n,j} = gb[j] + ga[n-j+2] - row_norm[n]``.  Both backends sum each row
sequentially after subtracting the row maximum, so they agree to rounding.
"""

import math

import numpy as np

from .._backend import njit


def _row_log_norms_py(gb, ga, n_max):
    out = np.full(n_max + 1, np.nan)
    for n in range(2, n_max + 1):
        m = -np.inf
        for j in range(1, n):
            v = gb[j] + ga[n - j + 2]
            if v > m:
                m = v
        s = 0.0
        for j in range(1, n):
            s += math.exp(gb[j] + ga[n - j + 2] - m)
        out[n] = m + math.log(s)
    return out


def _laplace_log_series_py(gb, ga, row_norm, log_disc, n_max, k):
    out = np.full(n_max + 1, -np.inf)
    out[0] = np.nan
    if k <= 1:
        out[1] = 0.0
        start = 2
        jlo = 1
    else:
        out[k] = -log_disc[k]
        start = k + 1
        jlo = k
    buf = np.empty(n_max + 1)
    for n in range(start, n_max + 1):
        m = -np.inf
        for j in range(jlo, n):
            v = gb[j] + ga[n - j + 2] + out[j]
            buf[j] = v
            if v > m:
                m = v
        s = 0.0
        for j in range(jlo, n):
            s += math.exp(buf[j] - m)
        out[n] = m + math.log(s) - row_norm[n] - log_disc[n]
    return out


def _mean_time_series_py(gb, ga, row_norm, inv_rate, n_max):
    out = np.zeros(n_max + 1)
    for n in range(2, n_max + 1):
        s = 0.0
        for j in range(1, n):
            s += math.exp(gb[j] + ga[n - j + 2] - row_norm[n]) * out[j]
        out[n] = inv_rate[n] + s
    return out


row_log_norms_numba = njit(cache=True)(_row_log_norms_py)
laplace_log_series_numba = njit(cache=True)(_laplace_log_series_py)
mean_time_series_numba = njit(cache=True)(_mean_time_series_py)


def row_log_norms_numpy(gb, ga, n_max):
    out = np.full(n_max + 1, np.nan)
    for n in range(2, n_max + 1):
        j = np.arange(1, n)
        v = gb[j] + ga[n - j + 2]
        m = v.max()
        out[n] = m + math.log(np.add.accumulate(np.exp(v - m))[-1])
    return out


def laplace_log_series_numpy(gb, ga, row_norm, log_disc, n_max, k):
    out = np.full(n_max + 1, -np.inf)
    out[0] = np.nan
    if k <= 1:
        out[1] = 0.0
        start, jlo = 2, 1
    else:
        out[k] = -log_disc[k]
        start, jlo = k + 1, k
    for n in range(start, n_max + 1):
        j = np.arange(jlo, n)
        v = gb[j] + ga[n - j + 2] + out[j]
        m = v.max()
        # accumulate keeps the summation order of the compiled kernel
        out[n] = m + math.log(np.add.accumulate(np.exp(v - m))[-1]) - row_norm[n] - log_disc[n]
    return out


def mean_time_series_numpy(gb, ga, row_norm, inv_rate, n_max):
    out = np.zeros(n_max + 1)
    for n in range(2, n_max + 1):
        j = np.arange(1, n)
        w = np.exp(gb[j] + ga[n - j + 2] - row_norm[n])
        out[n] = inv_rate[n] + np.add.accumulate(w * out[j])[-1]
    return out
