"""Real special functions: log-Gamma, Digamma, Trigamma and friends.

Everything here is self-contained (no scipy.special).  The scalar kernels
are plain ``math`` code so the same source compiles under numba or runs as
Python under the numpy backend.

Accuracy strategy for ``log_gamma``:

* ``x >= 10``: Stirling series with ten Bernoulli terms.
* ``[1.5, 2.5]`` and ``[0.5, 1.5]``: Taylor series of ``lnGamma(2+z)`` and
  ``lnGamma(1+z)`` whose coefficients are zeta values, so the zeros at 1 and 2
  are reproduced to full relative precision.
* elsewhere: recurrence into one of the above.
"""

import math
from typing import NamedTuple

import numpy as np

from ._backend import USE_NUMBA, jit, numba

EULER_GAMMA = 0.57721566490153286060651209
LOG_SQRT_2PI = 0.91893853320467274178032973

# B_2, B_4, ..., B_20
_BERNOULLI = np.array([
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0, 43867.0 / 798.0,
    -174611.0 / 330.0,
])

_N_SERIES = 60


def _zeta_minus_one(k, cutoff=30):
    """zeta(k) - 1 for integer k >= 2 via Euler-Maclaurin summation."""
    total = 0.0
    for n in range(cutoff - 1, 1, -1):
        total += float(n) ** -k
    big_n = float(cutoff)
    tail = big_n ** (1 - k) / (k - 1) + 0.5 * big_n ** -k
    # Euler-Maclaurin corrections B_2j/(2j)! * k(k+1)...(k+2j-2) N^(-k-2j+1)
    rising = float(k)
    fact = 2.0
    for j in range(1, 6):
        tail += _BERNOULLI[j - 1] / fact * rising * big_n ** (-k - 2 * j + 1)
        rising *= (k + 2 * j - 1) * (k + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return total + tail


_ZM1 = np.array([_zeta_minus_one(k) for k in range(2, _N_SERIES + 2)])
# lnGamma(1+z) = -g z + sum_k (-1)^k zeta(k) z^k / k
_LG1 = np.array([(-1) ** k * (1.0 + _ZM1[k - 2]) / k for k in range(2, _N_SERIES + 2)])
# lnGamma(2+z) = (1-g) z + sum_k (-1)^k (zeta(k)-1) z^k / k
_LG2 = np.array([(-1) ** k * _ZM1[k - 2] / k for k in range(2, _N_SERIES + 2)])
# psi(1+z) = -g + sum_k (-1)^k zeta(k) z^(k-1)
_PS1 = np.array([(-1) ** k * (1.0 + _ZM1[k - 2]) for k in range(2, _N_SERIES + 2)])
_PS2 = np.array([(-1) ** k * _ZM1[k - 2] for k in range(2, _N_SERIES + 2)])

# positive root of psi as a double-double, and Taylor coefficients
# (-1)^(k+1) zeta(k+1, root) of psi around it
_PSI_ROOT_HI = 1.4616321449683622
_PSI_ROOT_LO = 9.549995429965697e-17
_PSI_ROOT_TAYLOR = np.array([
    0.9676722454476212, -0.4427631689835921, 0.258499760955651,
    -0.16394270544240652, 0.10782405069126237, -0.07219956125645471,
    0.04880428816414311, -0.03316112647484736, 0.022597648232218104,
    -0.01542476590494896, 0.010538791616612175, -0.007204534386356869,
    0.004926781395729853, -0.003369801655439328, 0.002305126326734928,
    -0.0015769367714301972, 0.0010788252019162967, -0.0007380709389960052,
])


@jit
def _poly_tail(coef, z):
    # sum_i coef[i] z^(i+2), Horner from the top
    acc = 0.0
    for i in range(coef.shape[0] - 1, -1, -1):
        acc = acc * z + coef[i]
    return acc * z * z


@jit
def _stirling_corr(x):
    z2 = 1.0 / (x * x)
    acc = 0.0
    for k in range(_BERNOULLI.shape[0], 0, -1):
        acc = acc * z2 + _BERNOULLI[k - 1] / (2.0 * k * (2.0 * k - 1.0))
    return acc / x


@jit
def _lgamma(x):
    if not x > 0.0:
        return math.nan
    if x >= 10.0:
        return (x - 0.5) * math.log(x) - x + LOG_SQRT_2PI + _stirling_corr(x)
    if x < 0.5:
        return _lgamma(x + 1.0) - math.log(x)
    if x <= 1.5:
        z = x - 1.0
        return -EULER_GAMMA * z + _poly_tail(_LG1, z)
    if x <= 2.5:
        z = x - 2.0
        return (1.0 - EULER_GAMMA) * z + _poly_tail(_LG2, z)
    # 2.5 < x < 10: lnGamma(x) = ln((x-1)...(x-m)) + lnGamma(x-m)
    prod = 1.0
    y = x
    while y > 2.5:
        y -= 1.0
        prod *= y
    return math.log(prod) + _lgamma(y)


@jit
def _lgamma_ratio(x, d):
    """ln Gamma(x+d) - ln Gamma(x) without cancellation for large x."""
    y = x + d
    if not (x > 0.0 and y > 0.0):
        return math.nan
    if d == 0.0:
        return 0.0
    if x >= 10.0 and y >= 10.0:
        return (d * math.log(x) + (y - 0.5) * math.log1p(d / x) - d
                + (_stirling_corr(y) - _stirling_corr(x)))
    return _lgamma(y) - _lgamma(x)


@jit
def _digamma(x):
    if not x > 0.0:
        return math.nan
    if x >= 10.0:
        z2 = 1.0 / (x * x)
        acc = 0.0
        for k in range(_BERNOULLI.shape[0], 0, -1):
            acc = acc * z2 + _BERNOULLI[k - 1] / (2.0 * k)
        return math.log(x) - 0.5 / x - acc * z2
    if x < 0.5:
        return _digamma(x + 1.0) - 1.0 / x
    if abs(x - _PSI_ROOT_HI) < 0.1:
        h = (x - _PSI_ROOT_HI) - _PSI_ROOT_LO
        acc = 0.0
        for i in range(_PSI_ROOT_TAYLOR.shape[0] - 1, -1, -1):
            acc = acc * h + _PSI_ROOT_TAYLOR[i]
        return acc * h
    if x <= 1.5:
        z = x - 1.0
        return -EULER_GAMMA + _poly_tail(_PS1, z) / z if z != 0.0 else -EULER_GAMMA
    if x <= 2.5:
        z = x - 2.0
        return 1.0 - EULER_GAMMA + _poly_tail(_PS2, z) / z if z != 0.0 else 1.0 - EULER_GAMMA
    acc = 0.0
    y = x
    while y > 2.5:
        y -= 1.0
        acc += 1.0 / y
    return _digamma(y) + acc


@jit
def _trigamma(x):
    if not x > 0.0:
        return math.nan
    acc = 0.0
    y = x
    while y < 10.0:
        acc += 1.0 / (y * y)
        y += 1.0
    z2 = 1.0 / (y * y)
    s = 0.0
    for k in range(_BERNOULLI.shape[0], 0, -1):
        s = s * z2 + _BERNOULLI[k - 1]
    return acc + 1.0 / y + 0.5 * z2 + s * z2 / y


@jit
def _sinpi(x):
    # sin(pi x) with exact argument reduction
    r = x - 2.0 * math.floor(0.5 * x)  # [0, 2)
    sgn = 1.0
    if r >= 1.0:
        r -= 1.0
        sgn = -1.0
    if r > 0.5:
        r = 1.0 - r
    return sgn * math.sin(math.pi * r)


if USE_NUMBA:
    @numba.vectorize(["float64(float64)"], cache=True)
    def _lgamma_u(x):
        return _lgamma(x)

    @numba.vectorize(["float64(float64, float64)"], cache=True)
    def _lgamma_ratio_u(x, d):
        return _lgamma_ratio(x, d)

    @numba.vectorize(["float64(float64)"], cache=True)
    def _digamma_u(x):
        return _digamma(x)

    @numba.vectorize(["float64(float64)"], cache=True)
    def _trigamma_u(x):
        return _trigamma(x)
else:
    _lgamma_u = np.vectorize(_lgamma, otypes=[float])
    _lgamma_ratio_u = np.vectorize(_lgamma_ratio, otypes=[float])
    _digamma_u = np.vectorize(_digamma, otypes=[float])
    _trigamma_u = np.vectorize(_trigamma, otypes=[float])


def _positive(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise ValueError(f"{name} requires x > 0")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    return _out(_lgamma_u(_positive(x, "log_gamma")))


def log_gamma_ratio(x, d):
    """ln Gamma(x + d) - ln Gamma(x), accurate when x is large and d moderate."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if not (np.all(x > 0) and np.all(x + d > 0)):
        raise ValueError("log_gamma_ratio requires x > 0 and x + d > 0")
    return _out(_lgamma_ratio_u(x, d))


def digamma(x):
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    return _out(_digamma_u(_positive(x, "digamma")))


def trigamma(x):
    """psi'(x) for x > 0."""
    return _out(_trigamma_u(_positive(x, "trigamma")))


class SignedLogValue(NamedTuple):
    """A real number stored as (sign, ln|value|).

    ``sign == 0`` is an exact zero.  ``GAMMA_POLE`` (sign 0, log_abs +inf)
    marks a pole of Gamma; its reciprocal is an exact zero.
    """

    sign: int
    log_abs: float

    @property
    def is_pole(self):
        return self.sign == 0 and self.log_abs == math.inf

    def value(self):
        if self.is_pole:
            raise ZeroDivisionError("Gamma pole has no finite value")
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def reciprocal(self):
        if self.is_pole:
            return ZERO
        if self.sign == 0:
            raise ZeroDivisionError("reciprocal of zero")
        return SignedLogValue(self.sign, -self.log_abs)

    def __mul__(self, other):
        if not isinstance(other, SignedLogValue):
            return NotImplemented
        if self.is_pole or other.is_pole:
            raise ArithmeticError("product with a Gamma pole")
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return SignedLogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    @classmethod
    def from_float(cls, v):
        if v == 0.0:
            return ZERO
        return cls(1 if v > 0 else -1, math.log(abs(v)))


ZERO = SignedLogValue(0, -math.inf)
GAMMA_POLE = SignedLogValue(0, math.inf)


def gamma_signed(x):
    """Gamma(x) as a SignedLogValue; ``GAMMA_POLE`` at 0, -1, -2, ..."""
    x = float(x)
    if x > 0:
        return SignedLogValue(1, float(_lgamma(x)))
    if x == math.floor(x):
        return GAMMA_POLE
    # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    s = float(_sinpi(x))
    return SignedLogValue(1 if s > 0 else -1,
                          math.log(math.pi) - math.log(abs(s)) - float(_lgamma(1.0 - x)))


def recip_gamma_signed(x):
    """1/Gamma(x) as a SignedLogValue; exact zero at the poles."""
    return gamma_signed(x).reciprocal()


def gamma_quotient_asymptotic(alpha, beta, z):
    """Three-term large-z expansion of Gamma(z+alpha)/Gamma(z+beta)."""
    t = alpha - beta
    c2 = t * (t - 1.0) / 2.0 * (3.0 * (t - 1.0) ** 2 - alpha + beta - 1.0) / 12.0
    return z ** t * (1.0 + t * (alpha + beta - 1.0) / (2.0 * z) + c2 / (z * z))
