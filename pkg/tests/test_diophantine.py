from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tclab.circle import circle_dist, theta_at, two_prod, two_sum
from tclab.diophantine import (
    RotationNumber,
    continued_fraction,
    estimate_kappa,
    min_return_time,
    verify_no_return,
)
from tclab.errors import PrecisionExhausted

mpmath.mp.dps = 50
GOLDEN_MP = (mpmath.sqrt(5) - 1) / 2


def test_two_sum_and_prod_are_exact():
    a, b = 0.1, 1e-17 * 3
    s, e = two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)
    p, e = two_prod(1.0 / 3.0, 3.0e8 + 1.0)
    assert Fraction(p) + Fraction(e) == Fraction(1.0 / 3.0) * Fraction(3.0e8 + 1.0)


@pytest.mark.parametrize("n", [1, 10, 12345, 10**6, 10**8 + 7])
def test_theta_at_matches_high_precision(golden, n):
    theta0 = 0.123456789
    got = theta_at(theta0, float(n), golden.hi, golden.lo)
    want = mpmath.frac(mpmath.mpf(theta0) + n * GOLDEN_MP)
    assert abs(got - float(want)) <= 4 * np.spacing(1.0)


def test_circle_dist_wraps():
    assert circle_dist(0.01, 0.99) == pytest.approx(0.02)
    assert circle_dist(0.3, 0.3) == 0.0


def test_golden_quotients_all_one(golden):
    assert set(golden.partial_quotients) == {1}
    assert len(golden.partial_quotients) >= 30


def test_sqrt2_minus_one_quotients_all_two():
    cf = continued_fraction("0.41421356237309504880168872420969807856967187537694", 30)
    assert set(cf.quotients) == {2}


def test_rational_terminates():
    cf = continued_fraction(Fraction(1, 3), 10)
    assert cf.quotients == (3,) and cf.terminated
    assert cf.convergents == ((1, 3),)


def test_double_input_runs_out_of_precision():
    with pytest.raises(PrecisionExhausted) as info:
        continued_fraction(0.6180339887498949, 80)
    assert 20 < info.value.depth_reached < 80


def test_convergents_recurrence_and_quality(golden):
    cf = continued_fraction(golden.exact(), 25, uncertainty=Fraction(2) ** -100)
    qs = [q for _, q in cf.convergents]
    assert all(b > a for a, b in zip(qs[1:], qs[2:]))
    omega = golden.exact()
    for (p, q), (_, q_next) in zip(cf.convergents, cf.convergents[1:]):
        assert abs(omega - Fraction(p, q)) < Fraction(1, q * q_next)


def test_continued_fraction_rejects_bad_input():
    with pytest.raises(ValueError):
        continued_fraction(1.5, 3)
    with pytest.raises(ValueError):
        continued_fraction(0.5, 0)


def test_kappa_golden_against_fibonacci_oracle(golden):
    # q ||q omega|| is smallest at Fibonacci denominators; q = 1 wins
    fib = [1, 2]
    while fib[-1] < 10**6:
        fib.append(fib[-1] + fib[-2])
    oracle = min(float(q * abs(q * GOLDEN_MP - mpmath.nint(q * GOLDEN_MP)))
                 for q in fib if q <= 10**6)
    got = estimate_kappa(golden, 1.0, 10**6)
    assert 0.38 < got < 0.45
    assert got == pytest.approx(oracle, abs=1e-12)
    assert golden.kappa == got


def test_kappa_rational_is_zero():
    assert estimate_kappa(0.5, 1.0, 10) == 0.0


def test_kappa_larger_tau_not_smaller(golden):
    assert estimate_kappa(golden, 2.0, 10**4) >= estimate_kappa(golden, 1.0, 10**4)


def test_min_return_time_examples():
    assert min_return_time(0.01, 1.0, 1.0) == 100
    assert min_return_time(0.04, 0.5, 2.0) == 3
    with pytest.raises(ValueError):
        min_return_time(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        min_return_time(0.1, 0.0, 1.0)


@given(st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
def test_min_return_time_monotone(a, b):
    lo, hi = sorted((a, b))
    assert min_return_time(lo, 0.4, 1.0) >= min_return_time(hi, 0.4, 1.0)


def test_no_return_examples(golden):
    m = verify_no_return((0.1, 0.4), 100, golden)
    assert m is not None and m <= 4
    assert verify_no_return((0.5, 0.4), 100, golden) is None


def test_no_return_peak_neighbourhood(golden):
    eps = 2 * 1e6 ** (-1 / 7)
    n0 = min_return_time(eps, golden.kappa, 1.0)
    m = verify_no_return((-eps / 2, eps / 2), 10**4, golden)
    assert m > n0


def _oracle_first_return(a, length, n_max):
    for m in range(1, n_max + 1):
        d = mpmath.frac(m * GOLDEN_MP)
        if d <= length or d >= 1 - length:
            return m
    return None


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.floats(-6.0, -1.0))
def test_no_return_beyond_lemma_bound(a, log_eps):
    golden = RotationNumber.golden()
    eps = 10.0**log_eps
    m = verify_no_return((a, a + eps), 10**5, golden)
    bound = min_return_time(eps, golden.kappa, 1.0)
    assert m is None or m > bound
    if m is not None and m < 2000:
        assert m == _oracle_first_return(a, eps, 2000)


def test_rotation_from_decimal_roundtrip():
    rot = RotationNumber.from_decimal("0.41421356237309504880168872420969807856967187537694")
    assert rot.partial_quotients[:10] == (2,) * 10
    assert rot.to_dict()["hi"] == rot.hi
    with pytest.raises(ValueError):
        RotationNumber.from_decimal("1.5")
