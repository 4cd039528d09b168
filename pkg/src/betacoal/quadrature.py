"""Adaptive quadrature for Beta-type integrals, used as an independent oracle.

Integrals of the form int_0^1 g(r, 1-r) r^(alpha-1) (1-r)^(beta-1) dr are split
at 1/2; the left half is integrated in u = r^alpha and the right half in
v = (1-r)^beta, which turns both endpoint power singularities into constants.
``g`` receives both r and 1-r so that it can be evaluated accurately near 1.
"""

import math

from scipy import integrate


def beta_integral(g, alpha, beta, epsabs=0.0, epsrel=1e-11, limit=500):
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")

    def left(u):
        r = u ** (1.0 / alpha)
        return g(r, 1.0 - r) * (1.0 - r) ** (beta - 1.0) / alpha

    def right(v):
        s = v ** (1.0 / beta)
        return g(1.0 - s, s) * (1.0 - s) ** (alpha - 1.0) / beta

    lo, _ = integrate.quad(left, 0.0, 0.5 ** alpha, epsabs=epsabs, epsrel=epsrel, limit=limit)
    hi, _ = integrate.quad(right, 0.0, 0.5 ** beta, epsabs=epsabs, epsrel=epsrel, limit=limit)
    return lo + hi


def _log_one_minus(r, s):
    return math.log1p(-r) if r < 0.5 else math.log(s)


def merge_rate(a, b, p, k):
    """int r^(k-2) (1-r)^(p-k) r^(a-1) (1-r)^(b-1) dr."""
    return beta_integral(lambda r, s: 1.0, a + k - 2.0, b + p - k)


def phi(a, b, k):
    """int (1 - (1-r)^k) r^-1 r^(a-1) (1-r)^(b-1) dr."""

    def g(r, s):
        if r == 0.0:
            return float(k)
        if s == 0.0:
            return 1.0 / r
        return -math.expm1(k * _log_one_minus(r, s)) / r

    return beta_integral(g, a, b)


def mu(a, b):
    """int -log(1-r) r^(a-3) (1-r)^(b-1) dr, finite for a > 1."""

    def g(r, s):
        if r == 0.0:
            return 1.0
        return -_log_one_minus(r, s) / r if s > 0 else 0.0

    return beta_integral(g, a - 1.0, b)


def total_rate(a, b, n):
    """int (1 - (1-r)^n - n r (1-r)^(n-1)) r^-2 r^(a-1) (1-r)^(b-1) dr."""

    def g(r, s):
        if r < 1e-4:
            # series in r avoids cancellation: C(n,2) - 2 C(n,3) r + 3 C(n,4) r^2
            return (math.comb(n, 2) - 2 * math.comb(n, 3) * r
                    + 3 * math.comb(n, 4) * r * r - 4 * math.comb(n, 5) * r ** 3)
        return (1.0 - s ** n - n * r * s ** (n - 1)) / (r * r)

    return beta_integral(g, a, b)


__all__ = ["beta_integral", "merge_rate", "phi", "mu", "total_rate"]
