import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betacoal import quadrature
from betacoal import specfun as sf
from betacoal.rates import BetaParams, RateContext, RegimeError

GRID_A = (0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.5)
GRID_B = (0.5, 1.0, 1.5, 2.5)


def log_beta(x, y):
    return sf.log_gamma(x) + sf.log_gamma(y) - sf.log_gamma(x + y)


def grid_with_degenerate_lines():
    pairs = [(a, b) for a in GRID_A for b in GRID_B]
    pairs += [(a, 1.0 - a) for a in GRID_A if a < 1]
    pairs += [(a, 2.0 - a) for a in GRID_A if a < 2]
    return pairs


class TestBetaParams:
    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0), (math.nan, 1.0)])
    def test_rejects_invalid(self, a, b):
        with pytest.raises(ValueError):
            BetaParams(a, b)

    @pytest.mark.parametrize("a,regime,sub", [(0.5, "cdi", "cdi"), (1.0, "critical", "critical"),
                                              (1.5, "divergent", "divergent"), (2.0, "divergent", "a=2"),
                                              (3.0, "divergent", "a>2")])
    def test_regimes(self, a, regime, sub):
        p = BetaParams(a, 1.0)
        assert p.regime == regime and p.subregime == sub

    def test_prime(self):
        assert BetaParams(0.5, 1.5).prime() == BetaParams(0.5, 2.5)


class TestMergeRate:
    def test_single_pair_is_beta_function(self):
        r = RateContext((0.7, 1.3))
        assert r.merge_rate_log(2, 2) == pytest.approx(log_beta(0.7, 1.3), rel=1e-14)

    def test_unit_parameters(self):
        assert RateContext((1.0, 1.0)).merge_rate_log(3, 2) == pytest.approx(math.log(0.5), rel=1e-15)

    def test_decreasing_in_p(self):
        r = RateContext((0.6, 1.4))
        v = [r.merge_rate_log(p, 3) for p in range(3, 60)]
        assert np.all(np.diff(v) < 0)

    @pytest.mark.parametrize("p,k", [(1, 2), (4, 1), (3, 4)])
    def test_index_errors(self, p, k):
        with pytest.raises(ValueError):
            RateContext((1.0, 1.0)).merge_rate_log(p, k)

    def test_against_quadrature(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b = rng.uniform(0.2, 3.5), rng.uniform(0.2, 3.0)
            p = int(rng.integers(2, 40))
            k = int(rng.integers(2, p + 1))
            exact = math.exp(RateContext((a, b)).merge_rate_log(p, k))
            assert quadrature.merge_rate(a, b, p, k) == pytest.approx(exact, rel=1e-8)


class TestTotalRate:
    def test_two_blocks(self):
        for a, b in [(0.3, 0.5), (1.0, 2.0), (2.5, 0.7)]:
            assert RateContext((a, b)).total_rate(2) == pytest.approx(math.exp(log_beta(a, b)), rel=1e-13)

    def test_bolthausen_sznitman_line(self):
        n = np.arange(2, 3000)
        np.testing.assert_allclose(RateContext((1.0, 1.0)).total_rate(n), n - 1.0, rtol=1e-12)

    def test_a_two_b_one_is_harmonic_minus_one(self):
        n = np.arange(2, 500)
        h = np.cumsum(1.0 / np.arange(1, 500))[n - 1]
        np.testing.assert_allclose(RateContext((2.0, 1.0)).total_rate(n), h - 1.0, rtol=1e-13)

    @pytest.mark.parametrize("a,b", grid_with_degenerate_lines())
    def test_closed_form_matches_series(self, a, b):
        r = RateContext((a, b), n_max=5000)
        n = np.arange(2, 5001)
        np.testing.assert_allclose(r.total_rate(n), r.total_rate_series_table(5000)[2:], rtol=1e-10)
        for m in (2, 3, 50, 4999):
            assert r.total_rate(m) == pytest.approx(r.total_rate_series_oracle(m), rel=1e-10)

    @pytest.mark.parametrize("a", [1.0 + 5e-7, 2.0 - 3e-7, 1.0 - 9e-7])
    def test_near_singular_a_uses_series(self, a):
        r = RateContext((a, 1.3))
        for n in (2, 10, 1000):
            assert r.total_rate(n) == pytest.approx(r.total_rate_series_oracle(n), rel=1e-12)

    @pytest.mark.parametrize("a", [1.0 + 2e-6, 1.0 - 1e-5, 1.0 + 1e-4, 1.0 + 2e-3,
                                   2.0 - 2e-6, 2.0 + 1e-5, 2.0 - 1e-4, 2.0 - 2e-3])
    @pytest.mark.parametrize("b", [0.5, 4.0])
    def test_accuracy_close_to_singular_a(self, a, b):
        r = RateContext((a, b))
        for n in (2, 3, 40, 2999):
            assert r.total_rate(n) == pytest.approx(r.total_rate_series_oracle(n), rel=1e-10)

    def test_series_oracle_small_cases(self):
        assert RateContext((1.0, 1.0)).total_rate_series_oracle(10) == pytest.approx(9.0, rel=1e-15)

    def test_against_quadrature(self):
        for a, b, n in [(0.5, 1.5, 10), (1.5, 0.4, 25), (3.0, 2.0, 7)]:
            assert quadrature.total_rate(a, b, n) == pytest.approx(RateContext((a, b)).total_rate(n), rel=1e-8)

    @pytest.mark.parametrize("a,b", [(0.3, 0.5), (1.0, 1.5), (2.0, 0.5), (3.5, 2.5), (1.5, 0.5)])
    def test_strictly_increasing(self, a, b):
        lam = RateContext((a, b)).total_rate(np.arange(2, 4000))
        assert np.all(np.diff(lam) > 0)

    @pytest.mark.parametrize("a,b", [(2.5, 0.5), (3.0, 1.0), (3.5, 2.5)])
    def test_below_limit_when_a_above_two(self, a, b):
        r = RateContext((a, b))
        assert np.all(r.total_rate(np.arange(2, 20000)) < r.limit_rate())

    def test_limit_value(self):
        assert RateContext((3.0, 1.0)).limit_rate() == pytest.approx(1.0, rel=1e-14)


class TestAsymptotics:
    def test_a_two_value(self):
        r = RateContext((2.0, 1.0))
        assert r.total_rate_asymptotic(10_000) == pytest.approx(math.log(1e4) - 1 + 0.5772156649015329, rel=1e-14)

    def test_leading_term_structure(self):
        v = RateContext((1.5, 1.0)).total_rate_asymptotic(10 ** 6)
        lead = math.exp(sf.log_gamma(1.5)) * 2.0 * 1e3
        assert v == pytest.approx(lead, rel=1e-2)

    @pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.5, 1.5), (1.5, 0.5), (1.5, 1.0), (1.0, 1.5),
                                     (2.0, 0.5), (2.5, 1.0), (3.5, 1.5)])
    def test_relative_error_vanishes_monotonically(self, a, b):
        r = RateContext((a, b), n_max=2 ** 16)
        n = 2 ** np.arange(6, 17)
        err = np.abs(r.total_rate(n) / r.total_rate_asymptotic(n) - 1.0)
        assert err[-1] < 1e-2
        tail = err[n >= 2 ** 10]
        assert np.all(np.diff(tail) < 0)


class TestJumpDistribution:
    def test_two_blocks(self):
        d = RateContext((0.4, 2.0)).jump_distribution(2)
        np.testing.assert_allclose(d.probs, [1.0], rtol=1e-15)

    def test_three_blocks_unit_parameters(self):
        d = RateContext((1.0, 1.0)).jump_distribution(3)
        np.testing.assert_allclose(d.probs, [0.25, 0.75], rtol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 4.0), st.floats(0.1, 4.0), st.integers(2, 3000))
    def test_sums_to_one(self, a, b, n):
        d = RateContext((a, b)).jump_distribution(n)
        assert abs(math.fsum(d.probs) - 1.0) <= 1e-12
        assert d.norm_error <= 1e-12

    def test_matches_merge_rates(self):
        r = RateContext((0.8, 1.7))
        n = 12
        d = r.jump_distribution(n)
        lam = r.total_rate(n)
        for j in range(1, n):
            w = math.comb(n, j - 1) * math.exp(r.merge_rate_log(n, n - j + 1)) / lam
            assert d.probs[j - 1] == pytest.approx(w, rel=1e-12)

    def test_cached(self):
        r = RateContext((0.8, 1.7))
        assert r.jump_distribution(40) is r.jump_distribution(40)

    def test_concurrent_fill(self):
        r = RateContext((1.2, 0.9))
        results = {}

        def work(i):
            results[i] = [r.jump_distribution(n).probs.sum() for n in range(2, 400)]

        threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(np.allclose(v, 1.0, atol=1e-12) for v in results.values())


class TestTables:
    def test_growth_preserves_values(self):
        r = RateContext((0.7, 1.1), n_max=20)
        before = r.log_total_rates(20).copy()
        r.ensure(5000)
        np.testing.assert_array_equal(r.log_total_rates(20)[2:], before[2:])

    def test_row_norms_match_total_rate(self):
        r = RateContext((0.7, 1.1), n_max=3000)
        gb, ga, row_norm = r.tables(3000)
        n = np.arange(2, 3001)
        np.testing.assert_allclose(row_norm[n] + r._gn[n], r.log_total_rates(3000)[n], atol=1e-12)


class TestPhiAndMu:
    def test_phi_at_one_is_beta_function(self):
        assert RateContext((0.5, 1.5)).phi(1) == pytest.approx(math.exp(log_beta(0.5, 1.5)), rel=1e-14)

    @pytest.mark.parametrize("a,b", [(0.5, 1.5), (0.3, 0.7), (0.9, 0.2), (0.2, 3.0)])
    def test_phi_against_quadrature(self, a, b):
        r = RateContext((a, b))
        for k in (1, 2, 9, 100):
            assert quadrature.phi(a, b, k) == pytest.approx(r.phi(k), rel=1e-8)

    def test_phi_increasing_and_leading_term(self):
        r = RateContext((0.5, 1.5))
        k = np.arange(1, 5000)
        v = r.phi(k)
        assert np.all(np.diff(v) > 0)
        lead = math.exp(sf.log_gamma(0.5)) / 0.5 * 1e6 ** 0.5
        assert r.phi(10 ** 6) / lead == pytest.approx(1.0, rel=1e-2)

    def test_phi_regime(self):
        with pytest.raises(RegimeError):
            RateContext((1.5, 1.0)).phi(3)

    def test_mu_known_values(self):
        assert RateContext((2.0, 1.0)).mu() == pytest.approx(math.pi ** 2 / 6, rel=1e-14)
        assert RateContext((2.0, 2.0)).mu() == pytest.approx(math.pi ** 2 / 6 - 1.0, rel=1e-13)

    @pytest.mark.parametrize("a", [1.3, 1.5, 1.7, 2.0, 2.4, 3.0])
    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_mu_against_quadrature(self, a, b):
        assert quadrature.mu(a, b) == pytest.approx(RateContext((a, b)).mu(), rel=1e-6)

    def test_mu_regime(self):
        with pytest.raises(RegimeError):
            RateContext((1.0, 1.0)).mu()

    def test_prime(self):
        r = RateContext((1.0, 1.0)).prime()
        assert (r.a, r.b) == (1.0, 2.0)
        assert r.prime().b == 3.0
        n = 30
        expected = n - 1 - sum(1.0 / (1 + j) for j in range(1, n))
        assert r.total_rate(n) == pytest.approx(expected, rel=1e-13)
