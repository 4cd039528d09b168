"""Exact Laplace transforms of integral functionals of the block-counting chain.

For a sequence theta*psi on the states n >= 2,

    E_n = E[exp(theta int_0^tau_n psi(N_s) ds)]

satisfies the first-jump recursion

    E_n = (1 - theta psi(n)/lambda_n)^-1 sum_j w_{n,j} E_j,   E_1 = 1,

which is evaluated in the log domain.  The hitting variant E_{n,k} restricts
the expectation to paths that visit k (sum over j >= k, E_{k,k} base case).
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import specfun as sf
from .kernels import laplace_log_series, mean_time_series
from .rates import RateContext, RegimeError


class AdmissibilityError(ValueError):
    """theta psi(j) >= lambda_j at some state j, so E_n is infinite for n >= j."""

    def __init__(self, state: int, value: float, rate: float):
        self.state = int(state)
        super().__init__(
            f"theta*psi({state}) = {value!r} is not below lambda_{state} = {rate!r}; "
            f"the transform is infinite for every n >= {state}")


class Functional:
    """A sequence n -> theta*psi(n) on n >= 2 (the product is the unit of account).

    ``values`` maps an integer array of states to the products.  An optional
    ``log_discount(rates, n)`` returns ln(1 - theta psi(n)/lambda_n) directly,
    which lets special sequences bypass the cancellation in that difference.
    """

    def __init__(self, values: Callable[[np.ndarray], np.ndarray], tag: str = "custom",
                 log_discount: Callable[[RateContext, np.ndarray], np.ndarray] | None = None):
        self._fn = values
        self.tag = tag
        self._log_discount = log_discount
        self._memo = np.zeros(0)

    def __repr__(self):
        return f"Functional({self.tag!r})"

    def values(self, n_max: int) -> np.ndarray:
        """Array v with v[n] = theta*psi(n) for 2 <= n <= n_max (v[0] = v[1] = 0)."""
        if self._memo.shape[0] < n_max + 1:
            size = max(n_max + 1, 2 * self._memo.shape[0])
            v = np.zeros(size)
            if size > 2:
                v[2:] = np.asarray(self._fn(np.arange(2, size)), dtype=float)
            self._memo = v
        return self._memo[: n_max + 1]

    def log_discount(self, rates: RateContext, n_max: int) -> np.ndarray:
        """ln(1 - theta psi(n)/lambda_n) for n <= n_max; nan where inadmissible."""
        out = np.zeros(n_max + 1)
        if n_max < 2:
            return out
        n = np.arange(2, n_max + 1)
        if self._log_discount is not None:
            out[2:] = self._log_discount(rates, n)
            return out
        v = self.values(n_max)[2:]
        lam = np.exp(rates.log_total_rates(n_max)[2:])
        with np.errstate(invalid="ignore", divide="ignore"):
            ld = np.log1p(-v / lam)
        ld[~(v < lam)] = np.nan
        out[2:] = ld
        return out

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, theta: float, c: float = 1.0) -> "Functional":
        return cls(lambda n: np.full(n.shape, theta * c), tag=f"constant(theta={theta!r},c={c!r})")

    @classmethod
    def indicator(cls, k: int, theta: float) -> "Functional":
        """theta * 1{n >= k}."""
        return cls(lambda n: np.where(n >= k, float(theta), 0.0), tag=f"indicator(k={k},theta={theta!r})")

    @classmethod
    def zero(cls) -> "Functional":
        return cls(lambda n: np.zeros(n.shape), tag="zero", log_discount=lambda r, n: np.zeros(n.shape))

    @classmethod
    def from_array(cls, arr, theta: float = 1.0, tag: str = "array") -> "Functional":
        """Sequence given on states 0..len-1 (entries 0 and 1 are ignored)."""
        arr = np.asarray(arr, dtype=float)

        def fn(n):
            if n.max() >= arr.shape[0]:
                raise IndexError(f"sequence only defined up to state {arr.shape[0] - 1}")
            return theta * arr[n]

        return cls(fn, tag=tag)


def admissibility_violation(f: Functional, rates: RateContext, horizon: int, k: int = 2):
    """First state j in [k, horizon] with theta psi(j) >= lambda_j, or None."""
    ld = f.log_discount(rates, horizon)
    bad = np.nonzero(~np.isfinite(ld[k:]))[0]
    return None if bad.size == 0 else int(bad[0] + k)


class ThresholdResult(NamedTuple):
    value: float
    argmin: int
    stable: bool


def threshold_M(rates: RateContext, f: Functional, horizon: int) -> ThresholdResult:
    """inf over j <= horizon of lambda_j / psi(j) on the states with psi(j) > 0.

    ``stable`` is set when the ratios never decrease after the minimiser,
    i.e. the running infimum would not move if the horizon grew along the
    observed trend.
    """
    psi = f.values(horizon)[2:]
    if np.any(psi < 0):
        raise ValueError("threshold needs psi >= 0")
    lam = np.exp(rates.log_total_rates(horizon)[2:])
    with np.errstate(divide="ignore"):
        ratio = np.where(psi > 0, lam / np.where(psi > 0, psi, 1.0), np.inf)
    i = int(np.argmin(ratio))
    tail = ratio[i:]
    finite = tail[np.isfinite(tail)]
    stable = bool(np.all(np.diff(finite) >= 0))
    return ThresholdResult(float(ratio[i]), i + 2, stable)


@dataclass(frozen=True)
class LaplaceSeries:
    """ln E_n for n = 1..N stored at index n (index 0 unused)."""

    log_values: np.ndarray
    params: tuple
    tag: str
    k: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def variant(self) -> str:
        return "plain" if self.k is None else f"hitting({self.k})"

    @property
    def N(self) -> int:
        return self.log_values.shape[0] - 1

    def log_E(self, n):
        return self.log_values[n]

    def E(self, n):
        return np.exp(self.log_values[n])

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.log_values[1:]).tobytes()).hexdigest()

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["n", "log_E", "E"])
        for n in range(1, self.N + 1):
            v = float(self.log_values[n])
            e = "" if not math.isfinite(v) or abs(v) > 700 else format_float(math.exp(v))
            w.writerow([n, format_float(v), e])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def manifest(self) -> dict:
        a, b = self.params
        return {"a": a, "b": b, "functional": self.tag, "variant": self.variant,
                "N": self.N, "checksum_sha256": self.checksum()}


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _run(rates: RateContext, f: Functional, n_max: int, k: int) -> np.ndarray:
    gb, ga, row_norm = rates.tables(max(n_max, 2))
    log_disc = f.log_discount(rates, max(n_max, 2))
    lo = 2 if k <= 1 else k
    bad = np.nonzero(~np.isfinite(log_disc[lo:n_max + 1]))[0]
    if bad.size:
        j = int(bad[0] + lo)
        raise AdmissibilityError(j, float(f.values(j)[j]), rates.total_rate(j))
    return laplace_log_series(gb, ga, row_norm, log_disc, n_max, k)


def laplace_series(rates: RateContext, f: Functional, N: int) -> LaplaceSeries:
    """E_n(theta psi) for n = 1..N via the first-jump recursion."""
    if N < 1:
        raise ValueError("need N >= 1")
    out = _run(rates, f, N, 0)[: N + 1]
    return LaplaceSeries(out, (rates.a, rates.b), f.tag)


def laplace_series_hitting(rates: RateContext, f: Functional, k: int, N: int) -> LaplaceSeries:
    """E_{n,k}(theta psi) = E[exp(theta int psi) ; k is visited], n = 1..N.

    Entries below k are exactly zero, stored as ln 0 = -inf.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    if N < 1:
        raise ValueError("need N >= 1")
    if N < k:
        out = np.full(N + 1, -np.inf)
        out[0] = np.nan
        return LaplaceSeries(out, (rates.a, rates.b), f.tag, k)
    out = _run(rates, f, N, k)[: N + 1]
    return LaplaceSeries(out, (rates.a, rates.b), f.tag, k)


def mean_absorption_time(rates: RateContext, N: int) -> np.ndarray:
    """E[tau_n] for n = 0..N (entries 0 and 1 are zero)."""
    gb, ga, row_norm = rates.tables(max(N, 2))
    inv = np.zeros(max(N, 2) + 1)
    inv[2:] = np.exp(-rates.log_total_rates(max(N, 2))[2:])
    return mean_time_series(gb, ga, row_norm, inv, max(N, 2))[: N + 1]


# ---------------------------------------------------------------- special psi
def _check_ell(rates: RateContext, ell: float):
    if not ell > -rates.b:
        raise ValueError(f"need ell > -b = {-rates.b}, got {ell}")


def _shifted(rates: RateContext, ell: float, n_max: int) -> RateContext:
    return RateContext((rates.a, rates.b + ell), n_max=n_max)


def _special_log_quotient(rates: RateContext, ell: float, n: np.ndarray, k: int = 0) -> np.ndarray:
    """ln(1 - sgn(ell) psi(n)/lambda_n) for the special sequences (n >= 2)."""
    _check_ell(rates, ell)
    n = np.asarray(n, dtype=np.int64)
    out = np.zeros(n.shape, dtype=float)
    if ell == 0.0:
        return out
    a, b = rates.a, rates.b
    live = n > k if k >= 2 else np.ones(n.shape, dtype=bool)
    m = n[live]
    if m.size == 0:
        return out
    top = int(m.max())
    sh = _shifted(rates, ell, top)
    mf = m.astype(float)
    lq = (-sf.log_gamma_ratio(b + mf - 1.0, ell) + sf.log_gamma_ratio(a + b + mf - 2.0, ell)
          + sh.log_total_rates(top)[m] - rates.log_total_rates(top)[m])
    if k >= 2:
        # drop the jumps that skip state k: sum_{j<k} w'_{n,j} in the shifted law
        gb, ga, gn, ll = sh._gb, sh._ga, sh._gn, sh.log_total_rates(top)
        skipped = np.zeros(m.shape)
        for j in range(1, k):
            skipped += np.exp(gb[j] + ga[m - j + 2] + gn[m] - ll[m])
        lq = lq + np.log1p(-skipped)
    out[live] = lq
    return out


def special_psi(rates: RateContext, ell: float, n):
    """sgn(ell) psi_{a,b,ell}(n) through the cancellation-free quotient."""
    n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(n_arr < 2):
        raise ValueError("special sequence is defined for n >= 2")
    lq = _special_log_quotient(rates, ell, n_arr)
    lam = np.exp(rates.log_total_rates(int(n_arr.max()))[n_arr])
    out = -lam * np.expm1(lq)
    return float(out[0]) if np.ndim(n) == 0 else out


def special_psi_hitting(rates: RateContext, ell: float, k: int, n):
    """sgn(ell) psi_{a,b,ell,k}(n); zero for n <= k."""
    if k < 2:
        raise ValueError("need k >= 2")
    n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(n_arr < 2):
        raise ValueError("special sequence is defined for n >= 2")
    lq = _special_log_quotient(rates, ell, n_arr, k)
    lam = np.exp(rates.log_total_rates(int(n_arr.max()))[n_arr])
    out = -lam * np.expm1(lq)
    return float(out[0]) if np.ndim(n) == 0 else out


def special_functional(rates: RateContext, ell: float) -> Functional:
    _check_ell(rates, ell)
    return Functional(lambda n: special_psi(rates, ell, n), tag=f"special(ell={ell!r})",
                      log_discount=lambda r, n: _special_log_quotient(rates, ell, n))


def special_functional_hitting(rates: RateContext, ell: float, k: int) -> Functional:
    _check_ell(rates, ell)
    return Functional(lambda n: special_psi_hitting(rates, ell, k, n),
                      tag=f"special(ell={ell!r},k={k})",
                      log_discount=lambda r, n: _special_log_quotient(rates, ell, n, k))


def closed_form_log_E(b: float, ell: float, n, k: int | None = None):
    """ln of Gamma(b+ell+n-1)Gamma(b+k-1) / (Gamma(b+n-1)Gamma(b+ell+k-1)), k = 1 by default."""
    if not ell > -b:
        raise ValueError("need ell > -b")
    n = np.asarray(n, dtype=float)
    k0 = 1.0 if k is None else float(k)
    out = sf.log_gamma_ratio(b + n - 1.0, ell) - sf.log_gamma_ratio(b + k0 - 1.0, ell)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_E(b: float, ell: float, n, k: int | None = None):
    """Closed-form transform of the special sequence (hitting version when k is given)."""
    return np.exp(closed_form_log_E(b, ell, n, k))


# ---------------------------------------------------------------- records
def phi_functional(rates: RateContext) -> Functional:
    """theta*psi = -phi, the functional whose transform gives record probabilities."""
    return Functional(lambda n: -rates.phi(n), tag=f"-phi(a={rates.a!r},b={rates.b!r})")


def record_probabilities(rates: RateContext, N: int) -> np.ndarray:
    """P(tau_n != tau_{n+1}) for n = 1..N at index n (index 0 unused)."""
    if not rates.a < 1:
        raise RegimeError("record probabilities are implemented for 0 < a < 1")
    series = laplace_series(rates.prime(), phi_functional(rates), N)
    return np.exp(series.log_values)


def record_probability(rates: RateContext, n: int) -> float:
    return float(record_probabilities(rates, n)[n])


def record_probability_half_three_halves(n):
    """Explicit record probability for Beta(1/2, 3/2)."""
    n = np.asarray(n, dtype=float)
    out = 1.5 / ((2 * n + 1) * (2 * n - 1)) + 0.75 * math.exp(sf.log_gamma(1.5)) * np.exp(
        -sf.log_gamma_ratio(n, 1.5))
    return float(out) if np.ndim(out) == 0 else out


class KolmogorovBound(NamedTuple):
    n: int
    trunc: int
    partial_sum: float
    tail: float
    fit_constant: float

    @property
    def total(self) -> float:
        return self.partial_sum + self.tail


def _check_kolmogorov_regime(rates: RateContext):
    a, b = rates.a, rates.b
    if not (0 < a < 1 and b > 1 - a):
        raise RegimeError(f"Kolmogorov bound requires 0 < a < 1 and b > 1 - a (got a={a}, b={b})")


def kolmogorov_bounds(rates: RateContext, ns, trunc: int, records: np.ndarray | None = None):
    """Bounds on d_K(tau_n, tau_inf) for each n in ``ns`` sharing one truncation."""
    _check_kolmogorov_regime(rates)
    a = rates.a
    ns = [int(n) for n in np.atleast_1d(ns)]
    if min(ns) < 1 or max(ns) >= trunc:
        raise ValueError("need 1 <= n < trunc")
    if records is None or records.shape[0] < trunc + 1:
        records = record_probabilities(rates, trunc)
    lo = max(trunc // 10, 1)
    kk = np.arange(lo, trunc + 1)
    # one-parameter fit of ln p_k = ln C - (2 - a) ln k over the last decade
    log_c = float(np.mean(np.log(records[kk]) + (2.0 - a) * np.log(kk)))
    c_fit = math.exp(log_c)
    tail = c_fit * trunc ** (-(1.0 - a)) / (1.0 - a)
    suffix = np.concatenate((np.cumsum(records[trunc:0:-1])[::-1], [0.0]))
    # suffix[n-1] = sum_{k=n}^{trunc} p_k
    return [KolmogorovBound(n, trunc, float(suffix[n - 1]), tail, c_fit) for n in ns]


def kolmogorov_bound(rates: RateContext, n: int, trunc: int) -> KolmogorovBound:
    return kolmogorov_bounds(rates, [n], trunc)[0]


def scaling_exponent(series: LaplaceSeries, n: int) -> float:
    """Dyadic estimate (ln E_{2n} - ln E_n) / ln 2 of the growth exponent."""
    if n < 1 or 2 * n > series.N:
        raise IndexError(f"need 1 <= n and 2n <= {series.N}")
    return float((series.log_values[2 * n] - series.log_values[n]) / math.log(2.0))
