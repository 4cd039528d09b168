"""Large-deviation rate functions for the absorption time when a > 1.

L maps (-b, inf) increasingly and concavely onto (-inf, D); zeta is its
inverse and I is the Legendre transform of zeta.  The capped variant I^k
follows I up to the knee x_k and continues affinely with slope lambda_k.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from . import specfun as sf
from .rates import BetaParams, RateContext, RegimeError


class RateFunctionContext:
    """L, zeta, I and their relatives for one Beta(a, b) with a > 1."""

    def __init__(self, params: BetaParams | RateContext | tuple):
        if isinstance(params, RateContext):
            rates = params
        else:
            rates = RateContext(params)
        self.rates = rates
        self.params = rates.params
        a, b = self.params.a, self.params.b
        if not a > 1:
            raise RegimeError("rate functions are defined for a > 1 only")
        self.a, self.b = a, b
        self.D = rates.limit_rate()
        if a != 2.0:
            self._pref = math.exp(sf.log_gamma(a)) / ((2.0 - a) * (a - 1.0))
            z0 = a + b - 2.0
            # Gamma(b)/Gamma(a+b-2), exactly zero when a+b = 2
            self._c0 = (sf.gamma_signed(b) * sf.recip_gamma_signed(z0)).value()
            self._z0 = z0

    def __repr__(self):
        return f"RateFunctionContext(a={self.a!r}, b={self.b!r})"

    def _check_y(self, y):
        if not y > -self.b:
            raise ValueError(f"need y > -b = {-self.b}, got {y}")

    def L(self, y: float) -> float:
        self._check_y(y)
        a, b = self.a, self.b
        if y == 0.0:
            return 0.0
        if a == 2.0:
            return sf.digamma(b + y) - sf.digamma(b)
        z = self._z0 + y
        if self._z0 > 0 and z > 0:
            # relative form keeps full precision for small |y|
            rel = sf.log_gamma_ratio(b, y) - sf.log_gamma_ratio(self._z0, y)
            return self._pref * self._c0 * math.expm1(rel)
        # Gamma(b+y)/Gamma(z) written as z Gamma(b+y)/Gamma(z+1), zero at z = 0
        quot = z * math.exp(sf.log_gamma(b + y) - sf.log_gamma(z + 1.0))
        return self._pref * (quot - self._c0)

    def L_prime(self, y: float) -> float:
        self._check_y(y)
        a, b = self.a, self.b
        if a == 2.0:
            return sf.trigamma(b + y)
        z = self._z0 + y
        core = math.exp(sf.log_gamma(b + y) - sf.log_gamma(z + 1.0))
        return self._pref * core * (z * (sf.digamma(b + y) - sf.digamma(z + 1.0)) + 1.0)

    # ------------------------------------------------------------------ zeta
    def _bracket_value(self, x: float):
        b = self.b
        eps = 1e-8
        lo = -b + eps
        while self.L(lo) > x:
            eps *= 1e-4
            if eps < 1e-300:
                raise ArithmeticError(f"cannot bracket L(y) = {x}")
            lo = -b + eps
        hi = 1.0
        while self.L(hi) < x:
            lo = hi
            hi *= 2.0
        return lo, hi

    def zeta(self, x: float) -> float:
        """The y > -b with L(y) = x; +inf for x >= D (only possible when a > 2)."""
        if x == 0.0:
            return 0.0
        if x >= self.D:
            return math.inf
        lo, hi = self._bracket_value(x)
        tol = 1e-12 * max(1.0, abs(x))
        y = 0.5 * (lo + hi) if not lo < 0.0 < hi else 0.0
        for _ in range(300):
            f = self.L(y) - x
            if f == 0.0:
                return y
            if f < 0:
                lo = y
            else:
                hi = y
            step = f / self.L_prime(y)
            # where L is flat a small residual can still hide a sizeable error in y
            if abs(f) <= tol and abs(step) <= 1e-15 * max(1.0, abs(y)):
                return y - step
            y_new = y - step
            if not lo < y_new < hi:
                y_new = 0.5 * (lo + hi)
            if y_new == y or hi - lo <= 4e-16 * max(1.0, abs(y)):
                return y_new
            y = y_new
        return y

    def zeta_prime(self, theta: float) -> float:
        if theta >= self.D:
            raise ValueError(f"zeta' needs theta < D = {self.D}")
        if theta == 0.0:
            return 1.0 / self.L_prime(0.0)
        return 1.0 / self.L_prime(self.zeta(theta))

    def lln_limit(self) -> float:
        """zeta'(0), the almost sure limit of tau_n / ln n."""
        return self.zeta_prime(0.0)

    # ------------------------------------------------------------------ I
    def big_I(self, x: float) -> float:
        if x < 0:
            return math.inf
        if x < 1e-12:
            return self.b
        target = 1.0 / x
        b = self.b
        eps = 1e-8
        lo = -b + eps
        while self.L_prime(lo) < target:
            eps *= 1e-4
            if eps < 1e-300:
                return self.b
            lo = -b + eps
        hi = 1.0
        while self.L_prime(hi) > target:
            lo = hi
            hi *= 2.0
        y = brentq(lambda v: self.L_prime(v) - target, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=500)
        return x * self.L(y) - y

    def x_threshold(self, k: int) -> float:
        """x_k = zeta'(lambda_k), where I^k leaves I."""
        if k < 2:
            raise ValueError("need k >= 2")
        return self.zeta_prime(self.rates.total_rate(k))

    def big_I_capped(self, k: int, x: float) -> float:
        xk = self.x_threshold(k)
        if x <= xk:
            return self.big_I(x)
        return self.big_I(xk) + self.rates.total_rate(k) * (x - xk)

    def legendre_sup_bruteforce(self, x: float, theta_min: float = -200.0,
                                points: int = 101, rounds: int = 60) -> float:
        """sup over theta of theta x - zeta(theta) by repeated grid zooming.

        Uses zeta only, so it is independent of the derivative-based ``big_I``.
        """

        def f(t):
            z = self.zeta(t)
            return -math.inf if math.isinf(z) else t * x - z

        if math.isfinite(self.D):
            hi = self.D * (1.0 - 1e-12) if self.D > 0 else self.D
        else:
            hi = 1.0
            while f(2.0 * hi) > f(hi):
                hi *= 2.0
            hi *= 2.0
        lo = theta_min
        best = -math.inf
        for _ in range(rounds):
            grid = np.linspace(lo, hi, points)
            vals = np.array([f(t) for t in grid])
            i = int(np.argmax(vals))
            best = max(best, float(vals[i]))
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
            if hi - lo < 1e-14 * max(1.0, abs(lo)):
                break
        return best
