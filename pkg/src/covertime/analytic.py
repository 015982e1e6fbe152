"""Closed-form laws for the Brownian cover time of a circle and for range switchbacks.

The cover time of a circle of circumference ``L`` has the same law as the first
time the range of a standard Wiener process reaches length ``L``.  Everything
here is evaluated in binary64; sinh/cosh ratios are rewritten in terms of
``exp(-c x)`` so that arguments well past 710 stay finite.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from ._special import KahanSum, erfc

try:
    import mpmath
except ImportError:  # pragma: no cover
    mpmath = None

__all__ = [
    "DomainError",
    "AccuracyError",
    "RangeState",
    "TransformQuery",
    "SeriesControl",
    "PgfQuery",
    "laplace_theta",
    "max_before_hit_cdf",
    "transform_F",
    "transform_G",
    "conditional_laplace",
    "density_theta1",
    "density_thetaL",
    "cdf_theta1",
    "cdf_thetaL",
    "quantile_theta1",
    "moments_theta1",
    "moments_thetaL",
    "poisson_rate",
    "switchback_pmf",
    "switchback_pgf",
    "invert_laplace",
    "stehfest_weights",
]

_LN2 = math.log(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
# exp(-x) is exactly 0.0 in binary64 beyond this.
_EXP_UNDERFLOW = 745.2
# Past t = 10 the upper tail of theta_1 is below 1e-19 while the alternating
# series only returns ~1e-15 of cancellation noise.
_SATURATION = 10.0


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class AccuracyError(ArithmeticError):
    """A series evaluation lost more accuracy than its control allows."""


def _finite(name: str, x: float) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} must be a real number, got {x!r}") from exc
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def _positive(name: str, x: float) -> float:
    x = _finite(name, x)
    if x <= 0.0:
        raise DomainError(f"{name} must be > 0, got {x}")
    return x


@dataclass(frozen=True)
class RangeState:
    """Current range length ``a`` and target range length ``L``, 0 < a <= L."""

    a: float
    L: float

    def __post_init__(self):
        a = _positive("a", self.a)
        L = _positive("L", self.L)
        if a > L:
            raise DomainError(f"need a <= L, got a={a}, L={L}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "L", L)


@dataclass(frozen=True)
class TransformQuery:
    """Laplace argument ``s >= 0`` with its rate ``c = sqrt(2 s)``."""

    s: float

    def __post_init__(self):
        s = _finite("s", self.s)
        if s < 0.0:
            raise DomainError(f"s must be >= 0, got {s}")
        object.__setattr__(self, "s", s)

    @property
    def c(self) -> float:
        return math.sqrt(2.0 * self.s)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the alternating series.

    Summation stops once the terms are past their magnitude peak and the
    latest term is below ``rel_tol * |partial sum| + abs_tol``.  ``abs_tol``
    is also the largest negative residue that is silently clamped to zero.
    """

    rel_tol: float = 1e-16
    abs_tol: float = 1e-14
    max_terms: int = 1000

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0.0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be an integer >= 1, got {self.max_terms}")


DEFAULT_SERIES = SeriesControl()


@dataclass(frozen=True)
class PgfQuery:
    """Argument ``t`` of the switchback PGF and the Poisson rate ``lam``."""

    t: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "t", _finite("t", self.t))
        lam = _finite("lam", self.lam)
        if lam < 0.0:
            raise DomainError(f"lam must be >= 0, got {lam}")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_range(cls, t: float, a: float, L: float) -> "PgfQuery":
        return cls(t, poisson_rate(a, L))


# ---------------------------------------------------------------------------
# Transforms


def laplace_theta(s: float, L: float = 1.0) -> float:
    """E[exp(-s theta_L)] = 1 / cosh^2(L sqrt(s/2)).

    Evaluated as ``4 e^{-cL} / (1 + e^{-cL})^2`` with ``c = sqrt(2 s)``.
    """
    q = TransformQuery(s)
    L = _positive("L", L)
    if q.s == 0.0:
        return 1.0
    e = math.exp(-q.c * L)
    return 4.0 * e / ((1.0 + e) * (1.0 + e))


def max_before_hit_cdf(a: float, y: float) -> float:
    """P(M_a <= y): probability of hitting ``-a`` before ``y`` from 0."""
    a = _positive("a", a)
    y = float(y)
    if math.isnan(y) or y < 0.0:
        raise DomainError(f"y must be >= 0, got {y}")
    if math.isinf(y):
        return 1.0
    return y / (a + y)


def _check_ay(a: float, y: float) -> tuple[float, float]:
    a = _positive("a", a)
    y = _finite("y", y)
    if y < 0.0:
        raise DomainError(f"y must be >= 0, got {y}")
    return a, y


def transform_F(s: float, a: float, y: float) -> float:
    """E[exp(-s tau_{-a}); M < y] = sinh(c y) / sinh(c (a + y))."""
    q = TransformQuery(s)
    a, y = _check_ay(a, y)
    if q.s == 0.0:
        return y / (a + y)
    c = q.c
    return math.exp(-c * a) * (math.expm1(-2.0 * c * y) / math.expm1(-2.0 * c * (a + y)))


def transform_G(s: float, a: float, y: float) -> float:
    """E[exp(-s tau_y); tau_y < tau_{-a}] = sinh(c a) / sinh(c (a + y))."""
    q = TransformQuery(s)
    a, y = _check_ay(a, y)
    if q.s == 0.0:
        return a / (a + y)
    c = q.c
    return math.exp(-c * y) * (math.expm1(-2.0 * c * a) / math.expm1(-2.0 * c * (a + y)))


def conditional_laplace(s: float, a: float, L: float) -> float:
    """E[exp(-s theta_L)] starting from an endpoint of a range of length ``a``.

    The solution of the renewal equation is
    ``sinh(ca)/sinh(cL) * tanh(cL/2)/tanh(ca/2)``, using
    ``d/du log tanh(cu/2) = c / sinh(cu)``.  Since
    ``sinh(x) / tanh(x/2) = 1 + cosh(x)`` this equals
    ``cosh^2(ca/2) / cosh^2(cL/2)``, evaluated here in exponential form.
    """
    q = TransformQuery(s)
    r = RangeState(a, L)
    if q.s == 0.0:
        return 1.0
    c = q.c
    ratio = math.exp(0.5 * c * (r.a - r.L)) * (1.0 + math.exp(-c * r.a)) / (1.0 + math.exp(-c * r.L))
    return ratio * ratio


# ---------------------------------------------------------------------------
# Density, CDF, quantiles, moments


def _time(t: float) -> float:
    return _positive("t", t)


def density_theta1(t: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Density of theta_1 (cover time of the unit circle) at ``t``.

    Sum of ``4 (-1)^n (n+1)^2 exp(-(n+1)^2 / 2t) / (sqrt(2 pi) t^{3/2})``.
    """
    t = _time(t)
    if 0.5 / t > _EXP_UNDERFLOW or t >= _SATURATION:
        return 0.0
    scale = 4.0 / (_SQRT_2PI * t * math.sqrt(t))
    acc = KahanSum()
    converged = False
    for n in range(ctl.max_terms):
        m2 = float((n + 1) * (n + 1))
        term = scale * m2 * math.exp(-m2 / (2.0 * t))
        acc.add(-term if n & 1 else term)
        # terms only decrease once m^2 > 2t
        if m2 > 2.0 * t and term < ctl.rel_tol * abs(acc.value) + ctl.abs_tol:
            converged = True
            break
    if not converged:
        raise AccuracyError(f"density series did not converge in {ctl.max_terms} terms at t={t}")
    return _clamp_density(acc.value, ctl, t)


def _clamp_density(value: float, ctl: SeriesControl, t: float) -> float:
    if value >= 0.0:
        return value
    if value >= -ctl.abs_tol:
        return 0.0
    raise AccuracyError(f"density evaluated to {value!r} at t={t}")


def density_thetaL(t: float, L: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Density of theta_L, via theta_L ~ L^2 theta_1."""
    t = _time(t)
    L = _positive("L", L)
    L2 = L * L
    return density_theta1(t / L2, ctl) / L2


def cdf_theta1(t: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """P(theta_1 <= t) = sum 4 (-1)^n (n+1) erfc((n+1) / sqrt(2t))."""
    t = _time(t)
    k = 1.0 / math.sqrt(2.0 * t)
    if k > 27.3:
        return 0.0
    if t >= _SATURATION:
        return 1.0
    acc = KahanSum()
    converged = False
    for n in range(ctl.max_terms):
        m = n + 1
        term = 4.0 * m * erfc(m * k)
        acc.add(-term if n & 1 else term)
        if m * m > 2.0 * t and term < ctl.rel_tol * abs(acc.value) + ctl.abs_tol:
            converged = True
            break
    if not converged:
        raise AccuracyError(f"cdf series did not converge in {ctl.max_terms} terms at t={t}")
    return min(1.0, max(0.0, acc.value))


def cdf_thetaL(t: float, L: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    t = _time(t)
    L = _positive("L", L)
    return cdf_theta1(t / (L * L), ctl)


def quantile_theta1(p: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Inverse of :func:`cdf_theta1` by bracketing and Brent's method."""
    from scipy.optimize import brentq

    p = _finite("p", p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")

    def gap(t: float) -> float:
        return cdf_theta1(t, ctl) - p

    lo, hi = 1e-3, 10.0
    while gap(lo) > 0.0:
        lo *= 0.5
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise AccuracyError(f"could not bracket quantile for p={p}")
    t = brentq(gap, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    if abs(gap(t)) > 1e-10:
        raise AccuracyError(f"quantile residual {gap(t)!r} for p={p}")
    return t


def moments_theta1() -> tuple[float, float]:
    """Mean and variance of theta_1.

    From 1/cosh^2(sqrt(s/2)) = 1 - s/2 + s^2/6 + O(s^3): E = 1/2 and
    E[theta^2] = 2 * (1/6) = 1/3, hence variance 1/12.  The expansion is
    rechecked symbolically and by quadrature of the density in the tests.
    """
    return 0.5, 1.0 / 12.0


def moments_thetaL(L: float) -> tuple[float, float]:
    L = _positive("L", L)
    mean, var = moments_theta1()
    L2 = L * L
    return mean * L2, var * L2 * L2


# ---------------------------------------------------------------------------
# Switchbacks


def poisson_rate(a: float, L: float) -> float:
    """lambda = log(L / a), the mean number of switchbacks."""
    r = RangeState(a, L)
    return math.log(r.L / r.a)


def switchback_pmf(k: int, a: float, L: float) -> float:
    """P(nu_{a,L} = k) for the Poisson(log(L/a)) switchback count."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k!r}")
    k = int(k)
    lam = poisson_rate(a, L)
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))


def switchback_pgf(t: float, a: float, L: float) -> float:
    """E[t^nu] = exp(lam (t - 1)) with lam = log(L/a).

    Equivalently ``(a/L)^(1-t)``: at t = 0 it is P(nu = 0) = a/L.
    """
    q = PgfQuery.from_range(t, a, L)
    return math.exp(q.lam * (q.t - 1.0))


# ---------------------------------------------------------------------------
# Numerical Laplace inversion


def _exact_stehfest(order: int) -> list[Fraction]:
    half = order // 2
    weights = []
    for k in range(1, order + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            num = j**half * math.factorial(2 * j)
            den = (math.factorial(half - j) * math.factorial(j) * math.factorial(j - 1)
                   * math.factorial(k - j) * math.factorial(2 * j - k))
            acc += Fraction(num, den)
        weights.append(acc if (k + half) % 2 == 0 else -acc)
    return weights


_STEHFEST_EXACT = {n: tuple(_exact_stehfest(n)) for n in range(8, 21, 2)}


def stehfest_weights(order: int = 14) -> tuple[float, ...]:
    """Gaver-Stehfest weights, rounded from exact rational values."""
    return tuple(float(w) for w in _exact_weights(order))


def _exact_weights(order: int) -> tuple[Fraction, ...]:
    if int(order) != order or order % 2 or not 8 <= order <= 20:
        raise DomainError(f"order must be an even integer in [8, 20], got {order!r}")
    return _STEHFEST_EXACT[int(order)]


def invert_laplace(transform: Callable[[float], float], t: float, order: int = 14) -> float:
    """Gaver-Stehfest approximation of the inverse Laplace transform at ``t``.

    The weighted sum is formed in 40-digit arithmetic when mpmath is
    installed; ``transform`` then receives mpmath reals and may return
    either mpmath or plain floats.  The method itself is only good to a
    few significant digits at order 14, and worse for originals with
    sharp features or fast decay.
    """
    t = _time(t)
    weights = _exact_weights(order)
    if mpmath is None:
        h = _LN2 / t
        return h * math.fsum(float(w) * transform(k * h) for k, w in enumerate(weights, start=1))
    with mpmath.workdps(40):
        h = mpmath.log(2) / mpmath.mpf(t)
        total = mpmath.fsum(
            mpmath.mpf(w.numerator) / w.denominator * transform(k * h)
            for k, w in enumerate(weights, start=1)
        )
        return float(h * total)
