import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noonsim.numerics import (
    GaussianRational,
    LogComplex,
    choose_exact,
    exact_sum,
    log_factorial,
    relative_log_factorial_terms,
    sum_log_terms,
    sum_logcomplex,
    wrap_phase,
)


def gaussian_rationals():
    ints = st.integers(min_value=-10**6, max_value=10**6)
    return st.builds(GaussianRational, ints, ints, st.integers(min_value=1, max_value=10**4))


def to_logcomplex(g: GaussianRational) -> LogComplex:
    # exact log of a rational magnitude even when it overflows a float
    if g.is_zero:
        return LogComplex.zero()
    norm = g.norm()
    log_mag = 0.5 * (math.log(norm.numerator) - math.log(norm.denominator))
    return LogComplex(log_mag, math.atan2(float(g.imag), float(g.real)))


def log_abs_exact(g: GaussianRational) -> float:
    n = g.norm()
    return 0.5 * (math.log(n.numerator) - math.log(n.denominator))


# --- log_factorial ---


def test_log_factorial_small_values():
    assert log_factorial(0) == 0.0
    assert log_factorial(1) == 0.0
    assert log_factorial(5) == pytest.approx(4.787491742782046, rel=1e-15)


def test_log_factorial_matches_lgamma():
    for n in range(0, 501):
        expected = math.lgamma(n + 1)
        assert log_factorial(n) == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_log_factorial_exact_integer_comparison():
    # compare against the log of the exact big integer
    for n in (10, 50, 170, 300, 500):
        f = math.factorial(n)
        shift = max(f.bit_length() - 60, 0)
        expected = math.log(f >> shift) + shift * math.log(2)
        assert abs(log_factorial(n) - expected) <= 1e-13 * expected


def test_log_factorial_recurrence():
    for n in range(1, 201):
        # exp(lf(n)) - n exp(lf(n-1)) relative to exp(lf(n))
        rel = 1.0 - math.exp(math.log(n) + log_factorial(n - 1) - log_factorial(n))
        assert abs(rel) < 1e-10


def test_relative_log_factorial_terms_reference_is_largest():
    args = np.array([[3, 4], [10, 0], [1, 1]])
    rel, ref = relative_log_factorial_terms(args, [1, 1])
    expected = [math.log(math.factorial(3) * math.factorial(4)), math.log(math.factorial(10)), 0.0]
    assert ref == pytest.approx(max(expected), rel=1e-15)
    assert max(rel) == 0.0
    assert np.allclose(rel + ref, expected, rtol=1e-14)


# --- LogComplex ---


def test_logcomplex_zero_absorbs():
    z = LogComplex.from_complex(3 - 4j)
    assert (z * LogComplex.zero()).is_zero
    assert (LogComplex.zero() * z).is_zero


def test_logcomplex_multiplication_wraps_phase():
    a = LogComplex(1.0, 3.0)
    b = LogComplex(2.0, 3.0)
    c = a * b
    assert c.log_magnitude == 3.0
    assert -math.pi < c.phase <= math.pi
    assert c.phase == pytest.approx(6.0 - 2 * math.pi)


def test_wrap_phase_interval():
    assert wrap_phase(math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


@given(st.complex_numbers(min_magnitude=1e-100, max_magnitude=1e100, allow_nan=False, allow_infinity=False))
def test_logcomplex_roundtrip(z):
    back = LogComplex.from_complex(z).to_complex()
    assert abs(back - z) <= 1e-12 * abs(z)


def test_sum_logcomplex_cancellation():
    z = LogComplex.from_complex(2.5 + 1j)
    assert sum_logcomplex([z, LogComplex.from_complex(-(2.5 + 1j))]).is_zero


def test_sum_logcomplex_one_plus_i():
    s = sum_logcomplex([LogComplex.one(), LogComplex(0.0, math.pi / 2)])
    assert math.exp(s.log_magnitude) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert s.phase == pytest.approx(math.pi / 4, rel=1e-15)


def test_sum_logcomplex_empty_and_zeros():
    assert sum_logcomplex([]).is_zero
    assert sum_logcomplex([LogComplex.zero(), LogComplex.zero()]).is_zero


def test_sum_logcomplex_wide_range_against_exact():
    rng = random.Random(1234)
    terms = []
    for _ in range(1000):
        # magnitudes between e^-300 and e^300
        k = rng.randint(-432, 432)
        re, im = rng.randint(-999, 999), rng.randint(-999, 999)
        scale = Fraction(2) ** k
        terms.append(GaussianRational.from_parts(re * scale, im * scale))
    exact = exact_sum(terms)
    approx = sum_logcomplex([to_logcomplex(t) for t in terms])
    assert abs(approx.log_magnitude - log_abs_exact(exact)) < 1e-10
    ref = math.atan2(float(exact.imag / abs(exact.real)), float(exact.real / abs(exact.real)))
    assert approx.phase == pytest.approx(ref, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(gaussian_rationals(), min_size=1, max_size=40))
def test_sum_logcomplex_matches_gaussian_rational(terms):
    exact = exact_sum(terms)
    approx = sum_logcomplex([to_logcomplex(t) for t in terms]).to_complex()
    target = exact.to_complex()
    scale = max(abs(t.to_complex()) for t in terms)
    # cancellation can only be resolved relative to the largest term
    assert abs(approx - target) <= max(1e-10 * abs(target), 1e-13 * scale, 1e-300)


def test_sum_log_terms_quarter_turns_are_exact():
    # +1, -1, +i, -i at equal magnitude cancel exactly
    s = sum_log_terms(np.zeros(4), np.array([0.0, math.pi, math.pi / 2, -math.pi / 2]))
    assert s.is_zero


# --- GaussianRational ---


def test_gaussian_rational_reduced_and_positive_denominator():
    g = GaussianRational(2, 4, -6)
    assert (g.numerator_real, g.numerator_imag, g.denominator) == (-1, -2, 3)


def test_gaussian_rational_i_powers():
    i = GaussianRational.i_power(1)
    assert i * i == GaussianRational(-1)
    assert GaussianRational.i_power(4) == GaussianRational(1)
    assert GaussianRational.i_power(-1) == GaussianRational(0, -1)


def test_gaussian_rational_division_and_norm():
    a = GaussianRational(3, 4, 5)
    assert a.norm() == Fraction(1)
    assert a / a == GaussianRational(1)
    assert a * a.conjugate() == GaussianRational(1)


@given(gaussian_rationals(), gaussian_rationals(), gaussian_rationals())
def test_gaussian_rational_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c


@given(gaussian_rationals(), gaussian_rationals())
def test_gaussian_rational_norm_multiplicative(a, b):
    assert (a * b).norm() == a.norm() * b.norm()


# --- choose_exact ---


def test_choose_exact_examples():
    assert choose_exact(5, 2) == 10
    assert choose_exact(5, -1) == 0
    assert choose_exact(5, 6) == 0
    assert choose_exact(0, 0) == 1


def test_choose_exact_against_product_loop():
    value = 1
    for j in range(1, 51):
        value = value * (50 + j) // j
    assert choose_exact(100, 50) == value
    assert choose_exact(100, 50) == 100891344545564193334812497256
