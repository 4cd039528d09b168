"""Monte Carlo simulation of the block-counting chain and its estimators.

Every replicate draws from its own counter-based stream keyed by
(seed, replicate index), so results do not depend on thread count or on the
order in which replicates are run.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import stats

from ._backend import USE_NUMBA
from .kernels import simulate_batch, trace_path
from .kernels.chain import build_cumulative_table
from .laplace import Functional, format_float
from .rates import BetaParams, RateContext, RegimeError

DEFAULT_CACHE_LIMIT = 2048
_U64 = 1 << 64


@dataclass(frozen=True)
class SimConfig:
    params: BetaParams
    n0: int
    replicates: int = 1000
    seed: int = 0
    functional: Functional | None = field(default=None, compare=False)
    hitting_levels: tuple = ()
    cache_limit: int = DEFAULT_CACHE_LIMIT

    def __post_init__(self):
        if not isinstance(self.params, BetaParams):
            object.__setattr__(self, "params", BetaParams(*self.params))
        if self.n0 < 2:
            raise ValueError("need n0 >= 2")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        levels = tuple(sorted(int(k) for k in self.hitting_levels))
        if any(k < 2 or k >= self.n0 for k in levels):
            raise ValueError("hitting levels must lie in [2, n0)")
        object.__setattr__(self, "hitting_levels", levels)

    def with_(self, **kw) -> "SimConfig":
        d = dict(params=self.params, n0=self.n0, replicates=self.replicates, seed=self.seed,
                 functional=self.functional, hitting_levels=self.hitting_levels,
                 cache_limit=self.cache_limit)
        d.update(kw)
        return SimConfig(**d)


class PathSummary(NamedTuple):
    absorption_time: float
    hitting_times: dict
    functional_integral: float
    visited: frozenset
    jumps: int
    states: np.ndarray
    holding_times: np.ndarray


class EstimateWithCI(NamedTuple):
    mean: float
    std_error: float
    replicates: int

    @property
    def ci95(self):
        h = 1.959963984540054 * self.std_error
        return (self.mean - h, self.mean + h)

    def z_score(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.std_error

    def as_dict(self) -> dict:
        lo, hi = self.ci95
        return {"mean": self.mean, "std_error": self.std_error, "replicates": self.replicates,
                "ci95_low": lo, "ci95_high": hi}

    @classmethod
    def from_samples(cls, x) -> "EstimateWithCI":
        x = np.asarray(x, dtype=float)
        r = x.shape[0]
        mean = math.fsum(x) / r
        se = float(np.std(x, ddof=1) / math.sqrt(r)) if r > 1 else 0.0
        return cls(mean, se, r)


class BatchResult(NamedTuple):
    tau: np.ndarray
    integral: np.ndarray
    rb_log: np.ndarray
    jumps: np.ndarray
    hit: np.ndarray
    visited: np.ndarray
    levels: tuple
    first_replicate: int


@lru_cache(maxsize=8)
def _chain_tables(a: float, b: float, n0: int, cache_limit: int):
    rates = RateContext((a, b), n_max=n0)
    gb, ga, row_norm = rates.tables(n0)
    m = np.arange(2, n0 + 1)
    lam = np.zeros(n0 + 1)
    lam[2:] = np.exp(rates.log_total_rates(n0)[2:])
    q2 = np.zeros(n0 + 1)
    q2[2:] = np.exp(gb[m - 1] + ga[3] - row_norm[m])
    limit = min(n0, cache_limit)
    cum, off = build_cumulative_table(q2, a, b, limit)
    return lam, q2, cum, off, limit


def _tables(cfg: SimConfig):
    limit = cfg.cache_limit if USE_NUMBA else cfg.n0
    return _chain_tables(cfg.params.a, cfg.params.b, cfg.n0, limit)


def _seed(seed: int) -> np.uint64:
    return np.uint64(int(seed) % _U64)


def simulate_path(cfg: SimConfig, replicate_index: int) -> PathSummary:
    """One path of the chain; identical to replicate ``replicate_index`` of a batch."""
    lam, q2, cum, off, limit = _tables(cfg)
    states, holds = trace_path(cfg.n0, _seed(cfg.seed), np.uint64(replicate_index), lam, q2,
                               cfg.params.a, cfg.params.b, cum, off, limit)
    times = np.cumsum(holds)
    psi = _psi_array(cfg)
    hits = {}
    for k in cfg.hitting_levels:
        i = int(np.argmax(states < k))
        hits[k] = float(times[i - 1])
    integral = 0.0
    for s, h in zip(states[:-1], holds[:-1]):
        integral += psi[s] * h
    return PathSummary(float(times[-1]), hits, integral, frozenset(int(s) for s in states),
                       len(states) - 1, states, holds)


def _psi_array(cfg: SimConfig) -> np.ndarray:
    if cfg.functional is None:
        return np.zeros(cfg.n0 + 1)
    return np.ascontiguousarray(cfg.functional.values(cfg.n0), dtype=float)


def run_batch(cfg: SimConfig, first_replicate: int = 0, replicates: int | None = None) -> BatchResult:
    """Simulate replicates first_replicate, ..., first_replicate + replicates - 1."""
    r = cfg.replicates if replicates is None else int(replicates)
    lam, q2, cum, off, limit = _tables(cfg)
    levels = np.asarray(cfg.hitting_levels, dtype=np.int64)
    out = simulate_batch(cfg.n0, _seed(cfg.seed), np.uint64(first_replicate), r, lam,
                         _psi_array(cfg), q2, cfg.params.a, cfg.params.b, cum, off, limit, levels)
    return BatchResult(*out, cfg.hitting_levels, first_replicate)


# ---------------------------------------------------------------- estimators
class AbsorptionEstimate(NamedTuple):
    tau: EstimateWithCI
    tau_over_log_n: EstimateWithCI


def estimate_absorption(cfg: SimConfig, batch: BatchResult | None = None) -> AbsorptionEstimate:
    batch = run_batch(cfg) if batch is None else batch
    tau = EstimateWithCI.from_samples(batch.tau)
    ln = math.log(cfg.n0)
    return AbsorptionEstimate(tau, EstimateWithCI(tau.mean / ln, tau.std_error / ln, tau.replicates))


def _check_admissible(cfg: SimConfig):
    if cfg.functional is None:
        return
    lam, *_ = _tables(cfg)
    v = cfg.functional.values(cfg.n0)[2:]
    if np.any(v >= lam[2:]):
        warnings.warn("functional is not admissible; the naive estimator may have infinite variance",
                      RuntimeWarning, stacklevel=3)


def estimate_laplace_mc(cfg: SimConfig, batch: BatchResult | None = None) -> EstimateWithCI:
    """Naive estimate of E[exp(int theta psi)]."""
    if cfg.functional is None:
        raise ValueError("config has no functional")
    _check_admissible(cfg)
    batch = run_batch(cfg) if batch is None else batch
    return EstimateWithCI.from_samples(np.exp(batch.integral))


def rao_blackwell_negative_exponential(cfg: SimConfig, batch: BatchResult | None = None) -> EstimateWithCI:
    """E[exp(-int psi)] with the holding times integrated out.

    Given the sequence of visited states, the estimator is the product of
    lambda_m / (lambda_m + psi(m)) over the states left by a jump.
    """
    if cfg.functional is None:
        raise ValueError("config has no functional")
    if np.any(cfg.functional.values(cfg.n0) > 0):
        raise ValueError("Rao-Blackwell estimator expects theta*psi <= 0")
    batch = run_batch(cfg) if batch is None else batch
    return EstimateWithCI.from_samples(np.exp(batch.rb_log))


class MatchedEstimates(NamedTuple):
    naive: EstimateWithCI
    rao_blackwell: EstimateWithCI
    naive_variance: float
    rao_blackwell_variance: float


def matched_laplace_estimates(cfg: SimConfig) -> MatchedEstimates:
    """Naive and Rao-Blackwell estimates computed on the same paths."""
    batch = run_batch(cfg)
    naive = np.exp(batch.integral)
    rb = np.exp(batch.rb_log)
    return MatchedEstimates(estimate_laplace_mc(cfg, batch), rao_blackwell_negative_exponential(cfg, batch),
                            float(np.var(naive, ddof=1)), float(np.var(rb, ddof=1)))


def hitting_probability_mc(cfg: SimConfig, k: int, batch: BatchResult | None = None) -> EstimateWithCI:
    """Fraction of paths from n0 that visit state k."""
    if not 2 <= k < cfg.n0:
        raise ValueError("need 2 <= k < n0")
    if batch is None or k not in batch.levels:
        cfg = cfg.with_(hitting_levels=tuple(sorted(set(cfg.hitting_levels) | {k})))
        batch = run_batch(cfg)
    i = batch.levels.index(k)
    return EstimateWithCI.from_samples(batch.visited[:, i].astype(float))


def empirical_kolmogorov(cfg: SimConfig, n1: int, n2: int, independent: bool = True) -> float:
    """Two-sample sup distance between the empirical laws of tau_n1 and tau_n2.

    With ``independent`` the second sample uses the replicate indices that
    follow the first sample's, so the two sets share no random numbers.
    """
    if n1 > n2:
        raise ValueError("need n1 <= n2")
    r = cfg.replicates
    x = run_batch(cfg.with_(n0=n1, hitting_levels=(), functional=None)).tau
    y = run_batch(cfg.with_(n0=n2, hitting_levels=(), functional=None),
                  first_replicate=r if independent else 0).tau
    return float(stats.ks_2samp(x, y).statistic)


class LdpTailEstimate(NamedTuple):
    x: float
    exponent: float
    hits: int
    replicates: int
    lower_bound_only: bool


def ldp_tail_mc(cfg: SimConfig, x, batch: BatchResult | None = None):
    """-ln P(tau_n >= x ln n) / ln n by plain Monte Carlo, for one x or a grid."""
    if not cfg.params.a > 1:
        raise RegimeError("the absorption-time LDP needs a > 1")
    batch = run_batch(cfg.with_(functional=None)) if batch is None else batch
    ln = math.log(cfg.n0)
    out = []
    for xv in np.atleast_1d(x):
        hits = int(np.count_nonzero(batch.tau >= xv * ln))
        r = batch.tau.shape[0]
        if hits == 0:
            # no exceedance: all we know is P < 1/R
            out.append(LdpTailEstimate(float(xv), math.log(r) / ln, 0, r, True))
        else:
            out.append(LdpTailEstimate(float(xv), -math.log(hits / r) / ln, hits, r, False))
    return out[0] if np.ndim(x) == 0 else out


# ---------------------------------------------------------------- output
def write_paths_csv(batch: BatchResult, path) -> None:
    """One row per replicate: index, tau, hitting times, integral, jumps."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["replicate_index", "tau"] + [f"T_{k}" for k in batch.levels]
                   + ["integral", "jumps"])
        for i in range(batch.tau.shape[0]):
            w.writerow([batch.first_replicate + i, format_float(batch.tau[i])]
                       + [format_float(t) for t in batch.hit[i]]
                       + [format_float(batch.integral[i]), int(batch.jumps[i])])


def write_estimates_json(estimates: dict, path) -> None:
    payload = {k: (v.as_dict() if isinstance(v, EstimateWithCI) else v) for k, v in estimates.items()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
