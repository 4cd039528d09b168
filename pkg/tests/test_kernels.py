import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betacoal.kernels import chain, recursion, rng
from betacoal.laplace import Functional
from betacoal.rates import RateContext
from betacoal.simulator import _chain_tables

MASK = (1 << 64) - 1
G = 0x9E3779B97F4A7C15


def py_mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return z ^ (z >> 31)


def py_splitmix(state, count):
    out = []
    for _ in range(count):
        state = (state + G) & MASK
        out.append(py_mix(state))
    return out


class TestRng:
    def test_reference_sequence(self):
        # published SplitMix64 outputs for state 1234567
        ref = [6457827717110365317, 3203168211198807973, 9817491932198370423,
               4593380528125082431, 16408922859458223821]
        assert py_splitmix(1234567, 5) == ref
        got = [int(rng.mix64(np.uint64((1234567 + (i + 1) * G) & MASK))) for i in range(5)]
        assert got == ref

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, MASK), st.integers(0, 10 ** 6), st.integers(0, 500))
    def test_uniform_matches_python_oracle(self, seed, rep, ctr):
        key = py_mix((py_mix(seed) + rep * G) & MASK)
        assert int(rng.stream_key(np.uint64(seed), np.uint64(rep))) == key
        x = py_splitmix(key, ctr + 1)[-1]
        assert rng.uniform(np.uint64(key), ctr) == ((x >> 11) + 0.5) * 2.0 ** -53

    def test_vectorised_matches_scalar(self):
        keys = rng.stream_keys(np.uint64(99), np.arange(50))
        u = rng.uniforms(keys, np.arange(50))
        for i in range(50):
            assert keys[i] == rng.stream_key(np.uint64(99), np.uint64(i))
            assert u[i] == rng.uniform(keys[i], i)

    def test_open_interval_and_moments(self):
        keys = rng.stream_keys(np.uint64(5), np.arange(200_000))
        u = rng.uniforms(keys, np.zeros(200_000, dtype=np.uint64))
        assert u.min() > 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 5 * math.sqrt(1 / 12 / 200_000)
        assert rng.uniform(np.uint64(0), 0) > 0


def tables(a, b, n):
    r = RateContext((a, b), n_max=n)
    gb, ga, row_norm = r.tables(n)
    return r, gb, ga, row_norm


class TestRecursionBackends:
    @pytest.mark.parametrize("a,b", [(0.5, 1.5), (1.5, 1.0), (3.0, 0.4)])
    def test_row_norms(self, a, b):
        r, gb, ga, _ = tables(a, b, 600)
        x = recursion.row_log_norms_numba(gb, ga, 600)
        y = recursion.row_log_norms_numpy(gb, ga, 600)
        np.testing.assert_allclose(x[2:], y[2:], rtol=1e-14)

    @pytest.mark.parametrize("k", [0, 2, 7])
    def test_laplace(self, k):
        r, gb, ga, row_norm = tables(1.5, 1.0, 800)
        ld = Functional.constant(-1.3).log_discount(r, 800)
        x = recursion.laplace_log_series_numba(gb, ga, row_norm, ld, 800, k)
        y = recursion.laplace_log_series_numpy(gb, ga, row_norm, ld, 800, k)
        lo = max(k, 1)
        np.testing.assert_allclose(x[lo:], y[lo:], rtol=1e-13, atol=1e-13)
        np.testing.assert_array_equal(np.isinf(x[1:]), np.isinf(y[1:]))

    def test_mean_time(self):
        r, gb, ga, row_norm = tables(0.7, 0.9, 500)
        inv = np.zeros(501)
        inv[2:] = np.exp(-r.log_total_rates(500)[2:])
        x = recursion.mean_time_series_numba(gb, ga, row_norm, inv, 500)
        y = recursion.mean_time_series_numpy(gb, ga, row_norm, inv, 500)
        np.testing.assert_allclose(x, y, rtol=1e-13)


class TestChain:
    def test_cumulative_rows_end_at_one(self):
        lam, q2, cum, off, limit = _chain_tables(0.8, 1.4, 300, 300)
        for m in (2, 3, 50, 300):
            row = cum[off[m]:off[m] + m - 1]
            assert np.all(np.diff(row) > 0)
            assert row[-1] == pytest.approx(1.0, abs=1e-12)

    def test_table_rows_match_jump_distribution(self):
        r = RateContext((0.8, 1.4))
        lam, q2, cum, off, limit = _chain_tables(0.8, 1.4, 300, 300)
        for m in (3, 40, 300):
            probs = r.jump_distribution(m).probs  # index j-1 -> next state j = m - k + 1
            merge = probs[::-1]  # merge sizes 2..m
            np.testing.assert_allclose(np.diff(cum[off[m]:off[m] + m - 1], prepend=0.0), merge, rtol=1e-11, atol=1e-15)

    @pytest.mark.parametrize("a,b", [(0.5, 1.5), (1.5, 1.0)])
    def test_walk_matches_table(self, a, b):
        n0 = 400
        full = _chain_tables(a, b, n0, n0)
        small = _chain_tables(a, b, n0, 10)
        for rep in range(40):
            s1, h1 = chain.trace_path(n0, np.uint64(3), np.uint64(rep), full[0], full[1], a, b,
                                      full[2], full[3], full[4])
            s2, h2 = chain.trace_path(n0, np.uint64(3), np.uint64(rep), small[0], small[1], a, b,
                                      small[2], small[3], small[4])
            np.testing.assert_array_equal(s1, s2)
            np.testing.assert_array_equal(h1, h2)

    def test_sample_merge_bounds(self):
        lam, q2, cum, off, limit = _chain_tables(1.5, 1.0, 50, 50)
        assert chain.sample_merge(2, 0.999999, q2[2], 1.5, 1.0, cum, off, limit) == 2
        assert chain.sample_merge(50, 1e-300, q2[50], 1.5, 1.0, cum, off, limit) == 2
        assert chain.sample_merge(50, 1.0 - 1e-16, q2[50], 1.5, 1.0, cum, off, limit) <= 50
        assert chain.sample_merge(50, 1.0 - 1e-16, q2[50], 1.5, 1.0, cum, off, 10) <= 50

    @pytest.mark.parametrize("a,b", [(0.5, 1.5), (1.5, 1.0), (2.5, 0.5)])
    def test_batch_backends_agree(self, a, b):
        n0, reps = 300, 500
        lam, q2, cum, off, limit = _chain_tables(a, b, n0, n0)
        psi = np.zeros(n0 + 1)
        psi[2:] = 0.3 * np.log(np.arange(2, n0 + 1))
        levels = np.array([3, 17], dtype=np.int64)
        args = (n0, np.uint64(11), np.uint64(7), reps, lam, psi, q2, a, b, cum, off, limit, levels)
        x = chain.simulate_batch_numba(*args)
        y = chain.simulate_batch_numpy(*args)
        for u, v in zip(x, y):
            if u.dtype.kind == "f":
                np.testing.assert_allclose(u, v, rtol=1e-14)
            else:
                np.testing.assert_array_equal(u, v)

    def test_numpy_backend_needs_full_table(self):
        lam, q2, cum, off, limit = _chain_tables(1.5, 1.0, 100, 20)
        with pytest.raises(ValueError):
            chain.simulate_batch_numpy(100, np.uint64(0), np.uint64(0), 3, lam, np.zeros(101), q2, 1.5, 1.0,
                                       cum, off, limit, np.zeros(0, dtype=np.int64))

    def test_batch_matches_single_paths(self):
        a, b, n0 = 1.5, 1.0, 200
        lam, q2, cum, off, limit = _chain_tables(a, b, n0, n0)
        out = chain.simulate_batch_numba(n0, np.uint64(1), np.uint64(0), 20, lam, np.zeros(n0 + 1), q2, a, b,
                                         cum, off, limit, np.zeros(0, dtype=np.int64))
        for rep in range(20):
            s, h = chain.trace_path(n0, np.uint64(1), np.uint64(rep), lam, q2, a, b, cum, off, limit)
            assert out[3][rep] == len(s) - 1
            assert out[0][rep] == pytest.approx(h.sum(), rel=1e-14)
