import json
import math

import numpy as np
import pytest

from betacoal import laplace as lp
from betacoal import simulator as sim
from betacoal._backend import USE_NUMBA
from betacoal.laplace import Functional
from betacoal.rates import BetaParams, RateContext, RegimeError
from betacoal.ratefn import RateFunctionContext
from betacoal.simulator import EstimateWithCI, SimConfig


def cfg(a, b, n0, **kw):
    return SimConfig(BetaParams(a, b), n0, **kw)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            cfg(1.0, 1.0, 1)
        with pytest.raises(ValueError):
            cfg(1.0, 1.0, 10, replicates=0)
        with pytest.raises(ValueError):
            cfg(1.0, 1.0, 10, hitting_levels=(10,))

    def test_tuple_params_and_sorted_levels(self):
        c = SimConfig((1.5, 1.0), 20, hitting_levels=(7, 3))
        assert c.params == BetaParams(1.5, 1.0)
        assert c.hitting_levels == (3, 7)
        assert c.with_(seed=3).seed == 3


class TestEstimateWithCI:
    def test_from_samples(self):
        e = EstimateWithCI.from_samples([1.0, 2.0, 3.0, 4.0])
        assert e.mean == 2.5
        assert e.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
        lo, hi = e.ci95
        assert lo < 2.5 < hi
        assert e.as_dict()["replicates"] == 4

    def test_zero_error(self):
        e = EstimateWithCI(1.0, 0.0, 5)
        assert e.z_score(1.0) == 0.0 and e.z_score(2.0) == math.inf


class TestPaths:
    def test_structure(self):
        c = cfg(0.5, 1.5, 300, hitting_levels=(2, 5, 40), seed=9)
        for rep in range(50):
            p = sim.simulate_path(c, rep)
            assert p.states[0] == 300 and p.states[-1] == 1
            assert np.all(np.diff(p.states) < 0)
            assert p.jumps == len(p.states) - 1 <= 299
            assert {300, 1} <= p.visited
            assert p.hitting_times[2] == pytest.approx(p.absorption_time, rel=1e-14)
            assert p.hitting_times[40] <= p.hitting_times[5] <= p.absorption_time

    def test_path_matches_batch(self):
        c = cfg(1.5, 1.0, 500, hitting_levels=(3, 50), seed=123, replicates=30,
                functional=Functional.constant(-0.4))
        batch = sim.run_batch(c)
        for rep in (0, 7, 29):
            p = sim.simulate_path(c, rep)
            assert batch.tau[rep] == pytest.approx(p.absorption_time, rel=1e-13)
            assert batch.jumps[rep] == p.jumps
            assert batch.integral[rep] == pytest.approx(p.functional_integral, rel=1e-13)
            for i, k in enumerate(c.hitting_levels):
                assert batch.hit[rep, i] == pytest.approx(p.hitting_times[k], rel=1e-13)
                assert batch.visited[rep, i] == (k in p.visited)

    def test_two_blocks(self):
        a, b = 0.7, 1.6
        lam2 = RateContext((a, b)).total_rate(2)
        est = sim.estimate_absorption(cfg(a, b, 2, replicates=100_000, seed=4))
        assert abs(est.tau.z_score(1.0 / lam2)) < 3
        batch = sim.run_batch(cfg(a, b, 2, replicates=100))
        assert np.all(batch.jumps == 1)

    def test_holding_means_on_unit_line(self):
        c = cfg(1.0, 1.0, 12, seed=2)
        holds = {m: [] for m in range(2, 13)}
        for rep in range(6000):
            p = sim.simulate_path(c, rep)
            for s, h in zip(p.states[:-1], p.holding_times[:-1]):
                holds[int(s)].append(h)
        for m in (2, 5, 12):
            e = EstimateWithCI.from_samples(holds[m])
            assert abs(e.z_score(1.0 / (m - 1))) < 3

    def test_replicate_offset(self):
        c = cfg(1.5, 1.0, 100, replicates=40, seed=8)
        full = sim.run_batch(c)
        tail = sim.run_batch(c, first_replicate=25, replicates=15)
        np.testing.assert_array_equal(full.tau[25:], tail.tau)

    @pytest.mark.skipif(not USE_NUMBA, reason="thread count only matters for the numba backend")
    def test_independent_of_thread_count(self):
        import numba

        c = cfg(0.5, 1.5, 2000, replicates=3000, seed=77, hitting_levels=(3,))
        before = numba.get_num_threads()
        try:
            numba.set_num_threads(1)
            one = sim.run_batch(c)
            numba.set_num_threads(before)
            many = sim.run_batch(c)
        finally:
            numba.set_num_threads(before)
        for x, y in zip(one[:6], many[:6]):
            np.testing.assert_array_equal(x, y)

    def test_large_seed(self):
        c = cfg(1.5, 1.0, 50, replicates=5, seed=2 ** 64 + 5)
        np.testing.assert_array_equal(sim.run_batch(c).tau, sim.run_batch(c.with_(seed=5)).tau)


class TestEstimators:
    def test_zero_functional(self):
        c = cfg(1.5, 1.0, 100, replicates=500, functional=Functional.zero())
        e = sim.estimate_laplace_mc(c)
        assert e.mean == 1.0 and e.std_error == 0.0
        assert sim.rao_blackwell_negative_exponential(c).mean == 1.0

    def test_rao_blackwell_two_blocks(self):
        c = cfg(0.5, 1.5, 2, replicates=50, functional=Functional.constant(-2.0))
        lam2 = RateContext((0.5, 1.5)).total_rate(2)
        e = sim.rao_blackwell_negative_exponential(c)
        assert e.mean == pytest.approx(lam2 / (lam2 + 2.0), rel=1e-14)
        assert e.std_error == pytest.approx(0.0, abs=1e-15)

    def test_rao_blackwell_rejects_positive(self):
        with pytest.raises(ValueError):
            sim.rao_blackwell_negative_exponential(cfg(1.5, 1.0, 10, functional=Functional.constant(0.1)))

    def test_missing_functional(self):
        with pytest.raises(ValueError):
            sim.estimate_laplace_mc(cfg(1.5, 1.0, 10))

    def test_inadmissible_warns(self):
        c = cfg(1.0, 1.0, 5, replicates=10, functional=Functional.constant(1.5))
        with pytest.warns(RuntimeWarning):
            sim.estimate_laplace_mc(c)

    @pytest.mark.parametrize("a,b,n,f", [
        (1.5, 1.0, 60, Functional.constant(-1.0)),
        (1.5, 1.0, 60, Functional.indicator(10, 0.5)),
        (0.5, 1.5, 80, Functional(lambda n: -0.2 * np.log(n))),
        (1.0, 1.0, 40, Functional.constant(0.3)),
        (2.5, 0.5, 50, Functional(lambda n: -1.0 / n)),
    ])
    def test_naive_against_exact(self, a, b, n, f):
        c = cfg(a, b, n, replicates=40_000, seed=17, functional=f)
        exact = lp.laplace_series(RateContext((a, b)), f, n).E(n)
        assert abs(sim.estimate_laplace_mc(c).z_score(exact)) < 3

    def test_records_match_engine(self):
        r = RateContext((0.3, 0.9))
        f = lp.phi_functional(r)
        c = SimConfig(BetaParams(0.3, 1.9), 100, replicates=50_000, seed=3, functional=f)
        exact = lp.record_probability(r, 100)
        assert abs(sim.estimate_laplace_mc(c).z_score(exact)) < 3
        assert abs(sim.rao_blackwell_negative_exponential(c).z_score(exact)) < 3

    def test_rao_blackwell_reduces_variance(self):
        c = cfg(0.5, 2.5, 50, replicates=20_000, seed=5, functional=lp.phi_functional(RateContext((0.5, 1.5))))
        m = sim.matched_laplace_estimates(c)
        assert m.rao_blackwell_variance < m.naive_variance

    def test_hitting_three_blocks(self):
        c = cfg(1.0, 1.0, 3, replicates=100_000, seed=1)
        e = sim.hitting_probability_mc(c, 2)
        assert abs(e.z_score(0.75)) < 3
        assert 0 <= e.mean <= 1

    def test_hitting_against_exact(self):
        exact = lp.laplace_series_hitting(RateContext((1.5, 1.0)), Functional.zero(), 3, 300).E(300)
        zs = []
        for seed in range(8):
            c = cfg(1.5, 1.0, 300, replicates=25_000, seed=seed, hitting_levels=(3,))
            batch = sim.run_batch(c)
            zs.append(sim.hitting_probability_mc(c, 3, batch).z_score(exact))
        # independent seeds: the pooled z-score is standard normal when unbiased
        assert abs(sum(zs) / math.sqrt(len(zs))) < 3
        with pytest.raises(ValueError):
            sim.hitting_probability_mc(c, 300)

    def test_mean_absorption_against_exact(self):
        c = cfg(0.5, 1.5, 400, replicates=50_000, seed=12)
        exact = lp.mean_absorption_time(RateContext((0.5, 1.5)), 400)[400]
        est = sim.estimate_absorption(c)
        assert abs(est.tau.z_score(exact)) < 3
        assert est.tau_over_log_n.mean == pytest.approx(est.tau.mean / math.log(400))

    def test_coming_down_from_infinity(self):
        c = cfg(0.5, 1.5, 500, replicates=20_000, seed=21)
        x = sim.estimate_absorption(c).tau
        y = sim.estimate_absorption(c.with_(n0=1000, seed=22)).tau
        assert abs(y.mean - x.mean) < 1.96 * math.hypot(x.std_error, y.std_error)


class TestKolmogorovAndTails:
    def test_identical_samples(self):
        c = cfg(0.5, 1.5, 100, replicates=2000)
        assert sim.empirical_kolmogorov(c, 100, 100, independent=False) == 0.0

    def test_same_law(self):
        c = cfg(0.5, 1.5, 100, replicates=20_000)
        assert sim.empirical_kolmogorov(c, 100, 100) < 2.0 * math.sqrt(2 / 20_000)

    def test_order(self):
        with pytest.raises(ValueError):
            sim.empirical_kolmogorov(cfg(0.5, 1.5, 10), 20, 10)

    def test_distance_decreases_with_n(self):
        c = cfg(0.5, 1.5, 10, replicates=40_000, seed=31)
        d = [sim.empirical_kolmogorov(c, n, 4 * n) for n in (5, 20, 80)]
        assert d[0] > d[1] > d[2]

    def test_ldp_tail(self):
        c = cfg(1.5, 1.0, 1000, replicates=40_000, seed=8)
        x0 = RateFunctionContext((1.5, 1.0)).lln_limit()
        est = sim.ldp_tail_mc(c, [x0, 1.5 * x0, 2.0 * x0, 50.0])
        assert est[0].exponent < 0.15
        ex = [e.exponent for e in est]
        assert all(u <= v for u, v in zip(ex, ex[1:]))
        assert est[-1].lower_bound_only and est[-1].hits == 0
        single = sim.ldp_tail_mc(c, 1.5 * x0)
        assert single.exponent == est[1].exponent

    def test_ldp_regime(self):
        with pytest.raises(RegimeError):
            sim.ldp_tail_mc(cfg(0.5, 1.5, 100), 1.0)


class TestOutput:
    def test_paths_csv(self, tmp_path):
        c = cfg(1.5, 1.0, 50, replicates=4, hitting_levels=(3,), functional=Functional.constant(-1.0))
        batch = sim.run_batch(c, first_replicate=10)
        path = tmp_path / "paths.csv"
        sim.write_paths_csv(batch, path)
        lines = path.read_bytes().decode().split("\r\n")
        assert lines[0] == "replicate_index,tau,T_3,integral,jumps"
        row = lines[1].split(",")
        assert row[0] == "10" and float(row[1]) == batch.tau[0]
        assert float(row[3]) == pytest.approx(-batch.tau[0], rel=1e-14)

    def test_estimates_json(self, tmp_path):
        path = tmp_path / "est.json"
        sim.write_estimates_json({"tau": EstimateWithCI(1.0, 0.1, 10), "n": 5}, path)
        d = json.loads(path.read_text())
        assert d["n"] == 5 and d["tau"]["ci95_high"] == pytest.approx(1.0 + 0.1959963984540054)
