"""Transition rates of the Beta(a, b)-coalescent block-counting chain."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import specfun as sf
from .kernels import row_log_norms


class RegimeError(ValueError):
    """Raised when a quantity is requested outside its parameter regime."""


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of Lambda(dr) = r^(a-1) (1-r)^(b-1) dr (unnormalised)."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"need a > 0 and b > 0, got a={self.a}, b={self.b}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def regime(self) -> str:
        """'cdi' (comes down from infinity), 'critical' (a = 1) or 'divergent'."""
        if self.a < 1:
            return "cdi"
        if self.a == 1:
            return "critical"
        return "divergent"

    @property
    def subregime(self) -> str:
        if self.a == 2:
            return "a=2"
        if self.a > 2:
            return "a>2"
        return self.regime

    def prime(self) -> "BetaParams":
        """Parameters of (1-r) Lambda(dr), i.e. (a, b+1)."""
        return BetaParams(self.a, self.b + 1.0)


class JumpDistribution(NamedTuple):
    """Law of the next state j in 1..n-1 when leaving state n."""

    n: int
    states: np.ndarray
    log_weights: np.ndarray
    probs: np.ndarray
    cumulative: np.ndarray

    @property
    def norm_error(self) -> float:
        return abs(float(self.cumulative[-1]) - 1.0)


# the three-term closed form loses ~1e-16/|a-c| relative accuracy near c in {1, 2}
_NEAR_SINGULAR = 1e-3


def _as_int_array(n):
    arr = np.asarray(n)
    if arr.dtype.kind not in "iu":
        if not np.all(arr == np.floor(arr)):
            raise ValueError("state indices must be integers")
        arr = arr.astype(np.int64)
    return arr


class RateContext:
    """Rates of one Beta(a, b)-coalescent with lazily grown lookup tables.

    The tables hold log-Gamma *ratios* rather than raw log-Gamma values so
    that jump weights keep full relative precision for large states:

    * ``gb[j] = ln Gamma(b+j-1) - ln Gamma(j)``
    * ``ga[m] = ln Gamma(m+a-3) - ln Gamma(m)``
    * ``gn[n] = ln Gamma(n+1) - ln Gamma(a+b+n-2)``

    so that ``ln[C(n, j-1) lambda_{n,n-j+1}] = gb[j] + ga[n-j+2] + gn[n]``.
    """

    def __init__(self, params: BetaParams | tuple, n_max: int = 64):
        if not isinstance(params, BetaParams):
            params = BetaParams(*params)
        self.params = params
        self._lock = threading.Lock()
        self._n = 0
        self._jump_cache: dict[int, JumpDistribution] = {}
        self._row_norm = np.empty(0)
        self.ensure(n_max)

    def __repr__(self):
        return f"RateContext(a={self.a!r}, b={self.b!r})"

    @property
    def a(self):
        return self.params.a

    @property
    def b(self):
        return self.params.b

    # ------------------------------------------------------------------ tables
    def ensure(self, n_max: int) -> None:
        """Grow the lookup tables so that states up to ``n_max`` are covered."""
        if n_max <= self._n:
            return
        with self._lock:
            if n_max <= self._n:
                return
            size = max(int(n_max), 2 * self._n, 16)
            a, b = self.a, self.b
            j = np.arange(size + 2, dtype=float)
            gb = np.full(size + 2, np.nan)
            gb[1:] = sf.log_gamma_ratio(j[1:], b - 1.0)
            ga = np.full(size + 2, np.nan)
            ga[3:] = sf.log_gamma_ratio(j[3:], a - 3.0)
            gn = np.full(size + 2, np.nan)
            gn[2:] = -sf.log_gamma_ratio(j[2:] + 1.0, a + b - 3.0)
            log_lam = np.full(size + 2, np.nan)
            log_lam[2:] = np.log(self._total_rate_array(np.arange(2, size + 2)))
            self._gb, self._ga, self._gn, self._log_lam = gb, ga, gn, log_lam
            self._row_norm = np.empty(0)
            self._n = size

    @property
    def n_max(self) -> int:
        return self._n

    def tables(self, n_max: int):
        """(gb, ga, row_norm) covering states up to ``n_max``.

        ``row_norm[n]`` is the numerically summed log of
        ``sum_j exp(gb[j] + ga[n-j+2])``, so ``gb[j] + ga[n-j+2] - row_norm[n]``
        is an exactly normalised log jump probability.
        """
        self.ensure(n_max)
        if self._row_norm.shape[0] < n_max + 1:
            with self._lock:
                if self._row_norm.shape[0] < n_max + 1:
                    self._row_norm = row_log_norms(self._gb, self._ga, self._n)
        return self._gb, self._ga, self._row_norm

    def log_total_rates(self, n_max: int) -> np.ndarray:
        """Array whose entry n is ln lambda_n for 2 <= n <= n_max (nan below)."""
        self.ensure(n_max)
        return self._log_lam[: n_max + 1]

    # ------------------------------------------------------------------ rates
    def merge_rate_log(self, p, k):
        """ln lambda_{p,k}: rate at which a given k of p blocks merge."""
        p = _as_int_array(p)
        k = _as_int_array(k)
        if np.any(k < 2) or np.any(k > p):
            raise ValueError("merge rate needs 2 <= k <= p")
        a, b = self.a, self.b
        out = (sf.log_gamma(a + k - 2.0) + sf.log_gamma(b + p - k)
               - sf.log_gamma(a + b + p - 2.0))
        return float(out) if np.ndim(out) == 0 else out

    def total_rate(self, n):
        """lambda_n, the total jump rate out of state n >= 2."""
        n = _as_int_array(n)
        if np.any(n < 2):
            raise ValueError("total rate needs n >= 2")
        out = self._total_rate_array(np.atleast_1d(n))
        return float(out[0]) if np.ndim(n) == 0 else out

    def log_total_rate(self, n: int) -> float:
        if n < 2:
            raise ValueError("total rate needs n >= 2")
        if n <= self._n + 1:
            return float(self._log_lam[n])
        return math.log(self.total_rate(n))

    def _total_rate_array(self, n: np.ndarray) -> np.ndarray:
        a, b = self.a, self.b
        n = n.astype(float)
        if a == 1.0:
            # n - 1 - (b-1) sum_{j<n} 1/(b-1+j)
            return n - 1.0 - (b - 1.0) * _cumulative_at(1.0 / (b - 1.0 + np.arange(1, n.max())), n - 1)
        if a == 2.0:
            h = _cumulative_at(1.0 / (b + np.arange(1, n.max())), n - 1)
            return h - 1.0 + 1.0 / b + (b - 1.0) / (b + n - 1.0)
        if abs(a - 1.0) < _NEAR_SINGULAR or abs(a - 2.0) < _NEAR_SINGULAR:
            return self._series_array(n.astype(np.int64))
        lga = sf.log_gamma(a)
        t1 = math.exp(lga) / (2.0 - a) * np.exp(sf.log_gamma_ratio(n - 2.0 + a + b, 2.0 - a))
        t2 = -(b - 1.0) * math.exp(lga) / (1.0 - a) * np.exp(
            sf.log_gamma_ratio(n - 2.0 + a + b, 1.0 - a))
        t3 = self._constant_term()
        return t1 + t2 + t3

    def _constant_term(self) -> float:
        # Gamma(a) Gamma(b) / (Gamma(a+b-2) (1-a)(2-a)); zero when a+b in {1, 2}
        a, b = self.a, self.b
        rg = sf.recip_gamma_signed(a + b - 2.0)
        term = (sf.gamma_signed(a) * sf.gamma_signed(b) * rg
                * sf.SignedLogValue.from_float(1.0 / ((1.0 - a) * (2.0 - a))))
        return term.value()

    def _series_array(self, n: np.ndarray) -> np.ndarray:
        a, b = self.a, self.b
        j = np.arange(1, int(n.max()), dtype=float)
        terms = np.exp(sf.log_gamma(a) + np.log(j) - sf.log_gamma_ratio(b - 1.0 + j, a))
        return _cumulative_at(terms, n - 1)

    def total_rate_series_oracle(self, n: int) -> float:
        """lambda_n by direct summation of Gamma(a) sum_j j Gamma(b-1+j)/Gamma(a+b-1+j)."""
        if n < 2:
            raise ValueError("total rate needs n >= 2")
        a, b = self.a, self.b
        j = np.arange(1, n, dtype=float)
        logs = sf.log_gamma(a) + np.log(j) - sf.log_gamma_ratio(b - 1.0 + j, a)
        return math.fsum(np.exp(logs))

    def total_rate_series_table(self, n_max: int) -> np.ndarray:
        """lambda_n for n = 0..n_max by sequential partial sums of the series (nan below 2)."""
        out = np.full(n_max + 1, np.nan)
        out[2:] = self._series_array(np.arange(2, n_max + 1))
        return out

    def total_rate_asymptotic(self, n):
        """Large-n approximation of lambda_n including the known correction terms."""
        a, b = self.a, self.b
        n = np.asarray(n, dtype=float)
        if a == 1.0:
            out = n - (b - 1.0) * np.log(n)
        elif a == 2.0:
            out = np.log(n) - 1.0 - sf.digamma(b)
        elif a > 2.0:
            out = np.full_like(n, self.limit_rate())
        else:
            lead = math.exp(sf.log_gamma(a)) / (2.0 - a) * n ** (2.0 - a)
            first = (2.0 - a) / (2.0 * n) * (a + 2.0 * b - 3.0 - 2.0 * (b - 1.0) / (1.0 - a))
            out = lead * (1.0 + first + self.j_constant() / n ** (2.0 - a))
        return float(out) if np.ndim(out) == 0 else out

    def j_constant(self) -> float:
        """Gamma(b) / (Gamma(a+b-2) (1-a)), zero when a+b is 1 or 2."""
        a, b = self.a, self.b
        v = sf.gamma_signed(b) * sf.recip_gamma_signed(a + b - 2.0)
        return v.value() / (1.0 - a)

    def limit_rate(self) -> float:
        """lim lambda_n for a > 2 (infinite otherwise)."""
        a, b = self.a, self.b
        if a <= 2:
            return math.inf
        return math.exp(sf.log_gamma(a) + sf.log_gamma(b) - sf.log_gamma(a + b - 2.0)) / ((a - 1.0) * (a - 2.0))

    # ------------------------------------------------------------------ jumps
    def jump_distribution(self, n: int) -> JumpDistribution:
        """Law of the next state from n, w_{n,j} = C(n, j-1) lambda_{n,n-j+1} / lambda_n."""
        if n < 2:
            raise ValueError("jump distribution needs n >= 2")
        hit = self._jump_cache.get(n)
        if hit is not None:
            return hit
        gb, ga, row_norm = self.tables(n)
        j = np.arange(1, n)
        # normalised by the row sum itself, as in the recursion and the sampler
        logw = gb[j] + ga[n - j + 2] - row_norm[n]
        probs = np.exp(logw)
        dist = JumpDistribution(n, j, logw, probs, np.cumsum(probs))
        # idempotent insert; a racing thread computes the same value
        self._jump_cache.setdefault(n, dist)
        return dist

    # ------------------------------------------------------------------ others
    def phi(self, k):
        """phi(k) = int (1-(1-r)^k) r^-1 Lambda(dr), closed form for 0 < a < 1."""
        a, b = self.a, self.b
        if not a < 1:
            raise RegimeError("phi closed form is implemented for 0 < a < 1 only")
        k = np.asarray(k, dtype=float)
        if np.any(k < 1):
            raise ValueError("phi needs k >= 1")
        const = (sf.gamma_signed(b) * sf.recip_gamma_signed(a + b - 1.0)).value()
        ratio = np.exp(sf.log_gamma_ratio(k - 1.0 + a + b, 1.0 - a))
        out = math.exp(sf.log_gamma(a)) / (1.0 - a) * (ratio - const)
        return float(out) if np.ndim(out) == 0 else out

    def mu(self) -> float:
        """mu = int |log(1-r)| r^-2 Lambda(dr), finite for a > 1."""
        a, b = self.a, self.b
        if not a > 1:
            raise RegimeError("mu is finite only for a > 1")
        if a == 2.0:
            return sf.trigamma(b)
        z = a + b - 2.0
        # Gamma(b)/Gamma(z) (psi(b) - psi(z)) written through Gamma(z+1) so z <= 0 is fine
        core = math.exp(sf.log_gamma(b) - sf.log_gamma(z + 1.0)) * (
            z * (sf.digamma(b) - sf.digamma(z + 1.0)) + 1.0)
        return math.exp(sf.log_gamma(a)) / ((2.0 - a) * (a - 1.0)) * core

    def prime(self) -> "RateContext":
        """Context of (1-r) Lambda(dr), which is Beta(a, b+1)."""
        return RateContext(self.params.prime(), n_max=self._n)


def _cumulative_at(terms: np.ndarray, upto: np.ndarray) -> np.ndarray:
    """sum(terms[:m]) for every m in ``upto`` (sequential summation)."""
    csum = np.concatenate(([0.0], np.cumsum(terms)))
    return csum[np.asarray(upto, dtype=np.int64)]
