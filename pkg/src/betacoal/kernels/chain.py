"""Simulation of the block-counting chain.

From state m the chain holds an Exp(lambda_m) time, then k blocks merge
(2 <= k <= m) and the chain moves to m - k + 1.  The merge size is drawn by
inverse CDF: a precomputed cumulative table for m <= cache_limit, and for
larger m a sequential walk that performs exactly the same floating point
operations as the table build, so both give identical decisions.
"""

import math

import numpy as np

from .._backend import jit, njit, prange
from .rng import stream_key, stream_keys, uniform, uniforms


def build_cumulative_table(q2, a, b, limit):
    """Flat cumulative merge-size tables for states 2..limit.

    Row m occupies ``cum[off[m]:off[m] + m - 1]`` and holds P(k <= 2 + i).
    """
    limit = int(limit)
    off = np.zeros(limit + 2, dtype=np.int64)
    for m in range(2, limit + 1):
        off[m + 1] = off[m] + (m - 1)
    cum = np.empty(off[limit + 1])
    for m in range(2, limit + 1):
        k = np.arange(2.0, m)
        r = ((m - k) / (k + 1.0)) * ((a + k - 2.0) / (b + m - k - 1.0))
        q = np.cumprod(np.concatenate(([q2[m]], r)))
        cum[off[m]:off[m + 1]] = np.cumsum(q)
    return cum, off[: limit + 1]


@jit
def sample_merge(m, u, q2m, a, b, cum, off, cache_limit):
    """Number of merging blocks when leaving state m, given a uniform u."""
    if m <= cache_limit:
        base = off[m]
        last = m - 2
        if cum[base + last] < u:
            return m
        lo = 0
        hi = last
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[base + mid] >= u:
                hi = mid
            else:
                lo = mid + 1
        return lo + 2
    q = q2m
    c = 0.0
    k = 2
    while True:
        c += q
        if c >= u or k == m:
            return k
        q = q * (((m - k) / (k + 1.0)) * ((a + k - 2.0) / (b + m - k - 1.0)))
        k += 1


@jit
def trace_path(n0, seed, rep, lam, q2, a, b, cum, off, cache_limit):
    """States visited (n0 first, 1 last) and the holding time spent in each."""
    key = stream_key(seed, rep)
    states = np.empty(n0, dtype=np.int64)
    holds = np.zeros(n0)
    m = n0
    i = 0
    c = 0
    while m > 1:
        u1 = uniform(key, c)
        u2 = uniform(key, c + 1)
        c += 2
        states[i] = m
        holds[i] = -math.log(u1) / lam[m]
        m = m - sample_merge(m, u2, q2[m], a, b, cum, off, cache_limit) + 1
        i += 1
    states[i] = 1
    return states[: i + 1], holds[: i + 1]


@njit(parallel=True, cache=True)
def simulate_batch_numba(n0, seed, rep0, n_rep, lam, psi, q2, a, b, cum, off,
                         cache_limit, levels):
    n_lev = levels.shape[0]
    tau = np.empty(n_rep)
    integral = np.empty(n_rep)
    rb_log = np.empty(n_rep)
    jumps = np.empty(n_rep, dtype=np.int64)
    hit = np.empty((n_rep, n_lev))
    visited = np.zeros((n_rep, n_lev), dtype=np.bool_)
    for r in prange(n_rep):
        key = stream_key(seed, rep0 + r)
        m = n0
        t = 0.0
        s = 0.0
        lg = 0.0
        c = 0
        nj = 0
        while m > 1:
            u1 = uniform(key, c)
            u2 = uniform(key, c + 1)
            c += 2
            h = -math.log(u1) / lam[m]
            t += h
            s += psi[m] * h
            lg -= math.log1p(-psi[m] / lam[m])
            nxt = m - sample_merge(m, u2, q2[m], a, b, cum, off, cache_limit) + 1
            for i in range(n_lev):
                lev = levels[i]
                if m >= lev and nxt < lev:
                    hit[r, i] = t
                if nxt == lev:
                    visited[r, i] = True
            m = nxt
            nj += 1
        tau[r] = t
        integral[r] = s
        rb_log[r] = lg
        jumps[r] = nj
    return tau, integral, rb_log, jumps, hit, visited


def simulate_batch_numpy(n0, seed, rep0, n_rep, lam, psi, q2, a, b, cum, off,
                         cache_limit, levels):
    """Lock-step vectorised simulation; needs the table to cover every state."""
    if cache_limit < n0:
        raise ValueError("numpy backend needs cache_limit >= n0")
    n_lev = levels.shape[0]
    keys = stream_keys(seed, rep0 + np.arange(n_rep, dtype=np.uint64))
    m = np.full(n_rep, n0, dtype=np.int64)
    tau = np.zeros(n_rep)
    integral = np.zeros(n_rep)
    rb_log = np.zeros(n_rep)
    jumps = np.zeros(n_rep, dtype=np.int64)
    hit = np.empty((n_rep, n_lev))
    visited = np.zeros((n_rep, n_lev), dtype=np.bool_)
    active = np.arange(n_rep)
    c = 0
    while active.size:
        mm = m[active]
        ka = keys[active]
        u1 = uniforms(ka, np.full(active.size, c))
        u2 = uniforms(ka, np.full(active.size, c + 1))
        c += 2
        h = -np.log(u1) / lam[mm]
        tau[active] += h
        integral[active] += psi[mm] * h
        rb_log[active] -= np.log1p(-psi[mm] / lam[mm])

        base = off[mm]
        last = mm - 2
        lo = np.zeros(active.size, dtype=np.int64)
        hi = last.copy()
        todo = lo < hi
        while todo.any():
            mid = (lo + hi) // 2
            go = cum[base + mid] >= u2
            hi = np.where(todo & go, mid, hi)
            lo = np.where(todo & ~go, mid + 1, lo)
            todo = lo < hi
        lo = np.where(cum[base + last] < u2, last, lo)
        nxt = mm - (lo + 2) + 1

        t_now = tau[active]
        for i in range(n_lev):
            lev = levels[i]
            crossed = (mm >= lev) & (nxt < lev)
            hit[active[crossed], i] = t_now[crossed]
            visited[active[nxt == lev], i] = True
        m[active] = nxt
        jumps[active] += 1
        active = active[nxt > 1]
    return tau, integral, rb_log, jumps, hit, visited
