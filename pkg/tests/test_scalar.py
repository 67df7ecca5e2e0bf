import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilesplit.scalar import Scalar, exact_sum, factorize, frac_gcd, parse_scalar


def test_factorize_small():
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    assert factorize(1) == {}
    assert factorize(97) == {97: 1}


def test_rational_power_roundtrip():
    s = Scalar.power("2", "1/2")
    assert s.exact
    assert (s * s).as_fraction() == 2
    assert math.isclose(float(s), math.sqrt(2))


def test_numeric_mixing_gives_float():
    s = Scalar.rational(3) * Scalar.numeric(0.5)
    assert not s.exact
    assert math.isclose(float(s), 1.5)


def test_parse_forms():
    assert parse_scalar("1/3").as_fraction() == Fraction(1, 3)
    assert parse_scalar(2).as_fraction() == 2
    assert parse_scalar({"base": "2", "exponent": "-1/2"}).close(Scalar.numeric(2 ** -0.5))
    assert not parse_scalar(0.25).exact
    for bad in (True, "0", "-1/2", {"bse": 2}, [1]):
        with pytest.raises((ValueError, ZeroDivisionError)):
            parse_scalar(bad)


def test_frac_gcd():
    assert frac_gcd([Fraction(1, 2), Fraction(3, 4)]) == Fraction(1, 4)
    assert frac_gcd([Fraction(2), Fraction(3)]) == 1


def test_exact_sum_none_for_irrational():
    assert exact_sum([Scalar.rational("1/4"), Scalar.rational("3/4")]) == 1
    assert exact_sum([Scalar.power(2, "1/2")]) is None


def test_equal_exact_scalars_hash_equal():
    a = Scalar.rational("3/2")
    b = Scalar.rational(3) / Scalar.rational(2)
    assert a == b and hash(a) == hash(b)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=1000),
       st.fractions(min_value=Fraction(1, 1000), max_value=1000))
def test_products_match_fraction_arithmetic(p, q):
    a, b = Scalar.rational(p), Scalar.rational(q)
    assert (a * b).as_fraction() == p * q
    assert (a / b).as_fraction() == p / q
    assert math.isclose((a * b).log(), math.log(p) + math.log(q), abs_tol=1e-12)


@given(st.fractions(min_value=Fraction(1, 50), max_value=50), st.integers(-4, 4), st.integers(1, 4))
def test_rational_powers_compose(p, num, den):
    e = Fraction(num, den)
    s = Scalar.rational(p) ** e
    assert math.isclose(s.log(), float(e) * math.log(p), abs_tol=1e-12)
    assert (s ** den).close(Scalar.rational(p) ** num)
