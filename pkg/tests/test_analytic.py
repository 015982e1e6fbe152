import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import quad

from covertime import analytic as an
from covertime.analytic import AccuracyError, DomainError, SeriesControl

mpmath.mp.dps = 40


def quad_total(f, knots=(0.0, 0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0)):
    return math.fsum(quad(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
                     for lo, hi in zip(knots[:-1], knots[1:]))


def dual_density(t):
    """Large-time representation obtained by Poisson summation of the series."""
    t = mpmath.mpf(t)
    return sum((16 * mpmath.pi**2 * (k + 0.5) ** 2 * t - 4)
               * mpmath.exp(-mpmath.pi**2 * (2 * k + 1) ** 2 * t / 2) for k in range(60))


def dual_survival(t):
    t = mpmath.mpf(t)
    total = 0
    for k in range(60):
        b = mpmath.pi**2 * (2 * k + 1) ** 2 / 2
        total += (8 * t + 4 / b) * mpmath.exp(-b * t)
    return total


# --- laplace_theta -----------------------------------------------------------


def test_laplace_theta_at_zero():
    assert an.laplace_theta(0.0, 1.0) == 1.0


def test_laplace_theta_half_matches_density_quadrature():
    by_quad = quad_total(lambda t: math.exp(-0.5 * t) * an.density_theta1(t))
    assert by_quad == pytest.approx(0.78644773296592, abs=1e-10)
    assert an.laplace_theta(0.5, 1.0) == pytest.approx(by_quad, abs=1e-10)
    assert an.laplace_theta(0.5, 1.0) == pytest.approx(1 / math.cosh(0.5) ** 2, rel=1e-15)


def test_laplace_theta_scaling_substitution():
    assert an.laplace_theta(2.0, 2.0) == pytest.approx(an.laplace_theta(8.0, 1.0), rel=1e-15)


def test_laplace_theta_no_overflow():
    # naive cosh overflows at 710
    v = an.laplace_theta(2.0e5, 3.0)
    assert 0.0 <= v < 1e-300
    assert an.laplace_theta(1e4, 1.0) == pytest.approx(4 * math.exp(-math.sqrt(2e4)), rel=1e-12)


@pytest.mark.parametrize("s,L", [(-1.0, 1.0), (float("nan"), 1.0), (float("inf"), 1.0),
                                 (1.0, 0.0), (1.0, -2.0)])
def test_laplace_theta_domain(s, L):
    with pytest.raises(DomainError):
        an.laplace_theta(s, L)


@given(st.floats(0, 50), st.floats(1e-3, 50), st.floats(0.1, 3))
def test_laplace_theta_strictly_decreasing(s1, ds, L):
    s2 = s1 + ds
    v1, v2 = an.laplace_theta(s1, L), an.laplace_theta(s2, L)
    assume(v1 > 1e-250)
    assert v2 < v1
    assert an.laplace_theta(s2, L * 1.5) < v2 or v2 == 0.0


# --- hitting law and joint transforms ----------------------------------------


@pytest.mark.parametrize("a,y,expected", [(1, 1, 0.5), (1, 0, 0.0), (0.1, 0.9, 0.9)])
def test_max_before_hit_cdf(a, y, expected):
    assert an.max_before_hit_cdf(a, y) == pytest.approx(expected, abs=1e-15)


def test_max_before_hit_cdf_limits_and_domain():
    assert an.max_before_hit_cdf(1.0, float("inf")) == 1.0
    assert an.max_before_hit_cdf(1.0, 1e12) == pytest.approx(1.0, abs=1e-11)
    for a in (0.0, -1.0):
        with pytest.raises(DomainError):
            an.max_before_hit_cdf(a, 1.0)
    with pytest.raises(DomainError):
        an.max_before_hit_cdf(1.0, -0.1)


def test_transform_F_examples():
    assert an.transform_F(0.0, 1, 1) == 0.5
    assert an.transform_F(1e-14, 1, 1) == pytest.approx(0.5, rel=1e-10)
    assert an.transform_F(0.5, 1, 1) == pytest.approx(math.sinh(1) / math.sinh(2), rel=1e-14)
    assert an.transform_F(0.5, 1, 1) == pytest.approx(0.32403, abs=5e-6)
    assert an.transform_F(0.5, 1, 0) == 0.0


def test_transform_G_examples():
    assert an.transform_G(0.0, 1, 1) == 0.5
    assert an.transform_G(0.5, 1, 1) == pytest.approx(an.transform_F(0.5, 1, 1), rel=1e-15)
    c = math.sqrt(2.0)
    assert an.transform_G(1.0, 0.5, 1.5) == pytest.approx(math.sinh(c * 0.5) / math.sinh(c * 2), rel=1e-14)


def test_transforms_far_past_cosh_overflow():
    # sinh(c(a+y)) alone overflows; the ratio is exp(-c a)
    s = 0.5 * 2000.0**2
    assert an.transform_F(s, 0.5, 1.0) == pytest.approx(math.exp(-1000.0), rel=1e-12)
    assert an.transform_G(s, 1.0, 0.1) == pytest.approx(math.exp(-200.0), rel=1e-12)


@pytest.mark.parametrize("fn", [an.transform_F, an.transform_G])
@pytest.mark.parametrize("args", [(-1, 1, 1), (1, 0, 1), (1, -1, 1), (1, 1, -0.5)])
def test_transform_domain(fn, args):
    with pytest.raises(DomainError):
        fn(*args)


@given(st.floats(1e-3, 30), st.floats(1e-2, 3), st.floats(1e-2, 3))
def test_martingale_identity(s, a, y):
    c = math.sqrt(2 * s)
    F, G = an.transform_F(s, a, y), an.transform_G(s, a, y)
    assume(c * (a + y) < 300)
    assert math.exp(-c * a) * F + math.exp(c * y) * G == pytest.approx(1.0, abs=1e-12)
    assert math.exp(c * a) * F + math.exp(-c * y) * G == pytest.approx(1.0, abs=1e-12)


@given(st.floats(1e-2, 5), st.floats(0, 5))
def test_small_s_limits(a, y):
    s = 1e-16
    assert an.transform_F(s, a, y) == pytest.approx(an.max_before_hit_cdf(a, y), abs=1e-7)
    assert an.transform_G(s, a, y) == pytest.approx(a / (a + y), abs=1e-7)


def test_F_G_swap_symmetry():
    for s, a, y in [(0.3, 0.4, 1.7), (2.0, 1.0, 0.25)]:
        assert an.transform_F(s, a, y) == pytest.approx(an.transform_G(s, y, a), rel=1e-14)


# --- conditional transform -----------------------------------------------------


def test_antiderivative_of_c_over_sinh():
    c, u = sp.symbols("c u", positive=True)
    assert sp.simplify(sp.diff(sp.log(sp.tanh(c * u / 2)), u) - c / sp.sinh(c * u)) == 0


def test_closed_form_equals_literal_solution():
    # exp of the integral computed by quadrature, independent of the closed form
    for s, a, L in [(0.5, 0.5, 1.0), (3.0, 0.2, 2.5), (0.1, 0.05, 0.3)]:
        c = math.sqrt(2 * s)
        integral = quad(lambda u: c / math.sinh(c * u), a, L, epsabs=1e-14, epsrel=1e-13)[0]
        literal = math.sinh(c * a) / math.sinh(c * L) * math.exp(integral)
        assert an.conditional_laplace(s, a, L) == pytest.approx(literal, rel=1e-12)


@given(st.floats(0, 100), st.floats(1e-3, 5))
def test_conditional_laplace_at_L_is_one(s, L):
    assert an.conditional_laplace(s, L, L) == 1.0


def test_conditional_laplace_limit_to_laplace_theta():
    assert an.conditional_laplace(0.5, 1e-12, 1.0) == pytest.approx(0.78644773296592, abs=1e-12)
    for s in (0.1, 1.0, 10.0):
        for L in (0.5, 1.0, 3.0):
            assert abs(an.conditional_laplace(s, 1e-8, L) - an.laplace_theta(s, L)) <= 1e-6


def test_conditional_laplace_integral_equation_point():
    s, a, L = 0.5, 0.5, 1.0
    c = math.sqrt(2 * s)
    f = lambda x: an.conditional_laplace(s, x, L)
    rhs = math.sinh(c * a) / math.sinh(c * L) + quad(
        lambda x: c * math.sinh(c * a) / math.sinh(c * x) ** 2 * f(x), a, L, epsabs=1e-14)[0]
    assert abs(f(a) - rhs) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.05, 3), st.floats(0.01, 0.99))
def test_integral_equation_residual_property(s, L, frac):
    a = frac * L
    c = math.sqrt(2 * s)
    f = lambda x: an.conditional_laplace(s, x, L)
    integral = quad(lambda x: c * math.sinh(c * a) / math.sinh(c * x) ** 2 * f(x), a, L,
                    epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    assert abs(f(a) - math.sinh(c * a) / math.sinh(c * L) - integral) <= 1e-9


@given(st.floats(0.01, 20), st.floats(0.05, 3), st.floats(0.01, 0.98))
def test_ode_for_normalised_transform(s, L, frac):
    c = math.sqrt(2 * s)
    a = frac * L
    h = 1e-6 * L
    assume(a - h > 0 and a + h < L)
    g = lambda x: an.conditional_laplace(s, x, L) / math.sinh(c * x)
    fd = (g(a + h) - g(a - h)) / (2 * h)
    assert fd == pytest.approx(-g(a) * c / math.sinh(c * a), rel=1e-6)


@given(st.floats(0.01, 50), st.floats(0.1, 3), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_conditional_laplace_nondecreasing_in_a(s, L, f1, f2):
    a1, a2 = sorted((max(f1, 1e-6) * L, max(f2, 1e-6) * L))
    assert an.conditional_laplace(s, a1, L) <= an.conditional_laplace(s, a2, L)


def test_conditional_laplace_domain():
    for args in [(1.0, 0.0, 1.0), (1.0, 1.5, 1.0), (-0.1, 0.5, 1.0), (1.0, 0.5, -1.0)]:
        with pytest.raises(DomainError):
            an.conditional_laplace(*args)


# --- density ---------------------------------------------------------------------


def test_density_underflow_is_exact_zero():
    assert an.density_theta1(1e-6) == 0.0


@pytest.mark.parametrize("t", [0.3, 0.5, 1.0, 2.0, 3.0, 5.0])
def test_density_matches_dual_representation(t):
    exact = float(dual_density(t))
    tol = 1e-12 if t <= 3 else 1e-7
    assert an.density_theta1(t) == pytest.approx(exact, rel=tol)


@pytest.mark.parametrize("t", [0.2, 0.5, 1.0])
def test_density_matches_talbot_inversion(t):
    # independent inversion route, 40-digit Talbot contour
    F = lambda s: 1 / mpmath.cosh(mpmath.sqrt(s / 2)) ** 2
    assert an.density_theta1(t) == pytest.approx(float(mpmath.invertlaplace(F, t, method="talbot")), rel=1e-10)


def test_density_normalised():
    assert quad_total(an.density_theta1) == pytest.approx(1.0, abs=1e-9)


def test_density_nonnegative_everywhere():
    ts = np.geomspace(1e-4, 50, 3000)
    assert all(an.density_theta1(t) >= 0 for t in ts)


def test_density_scaling():
    assert an.density_thetaL(0.7, 1.0) == an.density_theta1(0.7)
    assert an.density_thetaL(2.0, 2.0) == an.density_theta1(0.5) / 4
    assert quad_total(lambda t: an.density_thetaL(t, 3.0),
                      knots=(0.0, 0.5, 2.0, 5.0, 10.0, 20.0, 50.0, 90.0)) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(1e-3, 30), st.floats(0.05, 10))
def test_density_scaling_bitwise(t, L):
    assert an.density_thetaL(t, L) == an.density_theta1(t / (L * L)) / (L * L)


def test_density_domain_and_controls():
    for t in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            an.density_theta1(t)
    with pytest.raises(AccuracyError):
        an.density_theta1(5.0, SeriesControl(max_terms=2))
    with pytest.raises(DomainError):
        SeriesControl(rel_tol=0)
    with pytest.raises(DomainError):
        SeriesControl(max_terms=0)


def test_density_flags_large_negative_residue():
    # an absurdly early stop leaves a large negative partial sum
    ctl = SeriesControl(rel_tol=10.0, abs_tol=0.0, max_terms=1000)
    with pytest.raises(AccuracyError):
        an.density_theta1(6.0, ctl)


# --- cdf and quantiles ---------------------------------------------------------


def test_cdf_limits():
    assert an.cdf_theta1(1e-4) == 0.0
    assert an.cdf_theta1(1e-3) < 1e-100
    assert an.cdf_theta1(50.0) == 1.0


def test_cdf_matches_density_quadrature():
    q = quad(an.density_theta1, 0.0, 0.5, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    assert an.cdf_theta1(0.5) == pytest.approx(q, abs=1e-8)


@pytest.mark.parametrize("t", [1.0, 3.0, 5.0, 8.0])
def test_cdf_tail_matches_dual(t):
    assert 1 - an.cdf_theta1(t) == pytest.approx(float(dual_survival(t)), abs=2e-15)


def test_cdf_derivative_is_density():
    h = 1e-5
    for t in np.linspace(0.05, 10.0, 200):
        fd = (an.cdf_theta1(t + h) - an.cdf_theta1(t - h)) / (2 * h)
        assert abs(fd - an.density_theta1(t)) <= 1e-6


def test_cdf_nondecreasing_and_bounded():
    vals = np.array([an.cdf_theta1(t) for t in np.geomspace(0.01, 20, 4000)])
    assert np.all((vals >= 0) & (vals <= 1))
    # rounding noise of the series is far below any statistical use
    assert np.all(np.diff(vals) >= -1e-14)


def test_quantile_round_trip_and_median():
    assert an.quantile_theta1(an.cdf_theta1(0.5)) == pytest.approx(0.5, abs=1e-8)
    med = an.quantile_theta1(0.5)
    assert abs(an.cdf_theta1(med) - 0.5) <= 1e-10
    assert 0.4 < med < 0.5


@given(st.floats(1e-8, 1 - 1e-8))
def test_quantile_residual(p):
    assert abs(an.cdf_theta1(an.quantile_theta1(p)) - p) <= 1e-10


def test_quantile_domain():
    for p in (0.0, 1.0, -0.1, 2.0):
        with pytest.raises(DomainError):
            an.quantile_theta1(p)


# --- moments -----------------------------------------------------------------


def test_moments_rederived_from_transform():
    s = sp.symbols("s", positive=True)
    series = sp.series(1 / sp.cosh(sp.sqrt(s / 2)) ** 2, s, 0, 3).removeO()
    mean = -series.coeff(s, 1)
    second = 2 * series.coeff(s, 2)
    assert (mean, second - mean**2) == (sp.Rational(1, 2), sp.Rational(1, 12))
    assert an.moments_theta1() == (0.5, 1 / 12)


def test_moments_by_quadrature():
    m1 = quad_total(lambda t: t * an.density_theta1(t))
    m2 = quad_total(lambda t: t * t * an.density_theta1(t))
    mean, var = an.moments_theta1()
    assert m1 == pytest.approx(mean, abs=1e-8)
    assert m2 - m1 * m1 == pytest.approx(var, abs=1e-8)


def test_moments_scale():
    assert an.moments_thetaL(2.0) == (2.0, 16 / 12)


# --- switchbacks ------------------------------------------------------------------


def test_pmf_examples():
    assert an.switchback_pmf(0, 1.0, 1.0) == 1.0
    assert an.switchback_pmf(3, 1.0, 1.0) == 0.0
    assert an.switchback_pmf(0, 0.3, 1.2) == pytest.approx(0.25, rel=1e-14)
    lam = math.log(10)
    assert an.switchback_pmf(2, 0.1, 1.0) == pytest.approx(math.exp(-lam) * lam**2 / 2, rel=1e-14)
    assert an.switchback_pmf(2, 0.1, 1.0) == pytest.approx(0.26509, abs=5e-6)


def test_pmf_large_k_is_finite():
    v = an.switchback_pmf(2000, 1e-300, 1.0)
    assert 0.0 <= v < 1e-100 and math.isfinite(v)


def test_pmf_sums_to_one():
    for a, L in [(0.5, 1.0), (1e-6, 1.0)]:
        assert math.fsum(an.switchback_pmf(k, a, L) for k in range(200)) == pytest.approx(1.0, abs=1e-14)


def test_pmf_domain():
    for k, a, L in [(-1, 0.1, 1), (1.5, 0.1, 1), (0, 0.0, 1), (0, 2.0, 1.0)]:
        with pytest.raises(DomainError):
            an.switchback_pmf(k, a, L)


def test_pgf_examples():
    assert an.switchback_pgf(1.0, 0.1, 1.0) == 1.0
    assert an.switchback_pgf(0.0, 0.1, 1.0) == pytest.approx(0.1, rel=1e-15)
    v = an.switchback_pgf(0.5, 0.1, 1.0)
    assert v == pytest.approx(10**-0.5, rel=1e-14)
    pmf_sum = math.fsum(an.switchback_pmf(k, 0.1, 1.0) * 0.5**k for k in range(100))
    assert abs(v - pmf_sum) <= 1e-12


@given(st.floats(1e-4, 0.999), st.integers(0, 40), st.floats(0, 1))
def test_pgf_pmf_tail_bound(frac, K, t):
    a, L = frac, 1.0
    lam = an.poisson_rate(a, L)
    partial = math.fsum(an.switchback_pmf(k, a, L) * t**k for k in range(K + 1))
    # Taylor remainder of exp(lam t): the first omitted term times exp(lam t)
    bound = math.exp(-lam + lam * t + (K + 1) * math.log(lam * t) - math.lgamma(K + 2)) if lam * t > 0 else 0.0
    assert -1e-15 <= an.switchback_pgf(t, a, L) - partial <= bound + 1e-14


def test_pgf_solves_its_integral_equation():
    # f(a) = a/L + a t int_a^L f(x)/x^2 dx
    for t in (0.0, 0.3, 0.8):
        L = 2.0
        for a in (0.05, 0.5, 1.7):
            f = lambda x: an.switchback_pgf(t, x, L)
            rhs = a / L + a * t * quad(lambda x: f(x) / x**2, a, L, epsabs=1e-14, epsrel=1e-13)[0]
            assert f(a) == pytest.approx(rhs, abs=1e-11)


def test_literal_negative_exponent_fails_integral_equation():
    # the exp(-lam (t - 1)) reading does not solve the same equation
    t, a, L = 0.5, 0.5, 2.0
    g = lambda x: math.exp(-math.log(L / x) * (t - 1))
    rhs = a / L + a * t * quad(lambda x: g(x) / x**2, a, L)[0]
    assert abs(g(a) - rhs) > 0.1


def test_pgf_query_validation():
    with pytest.raises(DomainError):
        an.PgfQuery(0.5, -1.0)
    assert an.PgfQuery.from_range(0.5, 0.1, 1.0).lam == pytest.approx(math.log(10))


def test_transform_query_rate():
    q = an.TransformQuery(3.7)
    assert q.c**2 == pytest.approx(2 * 3.7, rel=1e-15)
