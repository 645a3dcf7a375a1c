from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitchin_kp.errors import NotInvertibleError, WindowError
from hitchin_kp.series import (
    TruncatedLaurentSeries as TLS,
    VectorLaurent,
    XPoly,
    format_rational,
    parse_rational,
    residue,
    series_invert,
    series_mul,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def series(draw, lo_range=(-3, 1), length=(1, 6)):
    lo = draw(st.integers(*lo_range))
    hi = lo + draw(st.integers(*length))
    coeffs = {k: draw(rationals) for k in range(lo, hi)}
    return TLS(coeffs, lo, hi)


def test_product_examples():
    one_plus = TLS.from_list([1, 1], 0, 4)
    one_minus = TLS.from_list([1, -1], 0, 4)
    prod = series_mul(one_plus, one_minus)
    assert prod.coeffs == {0: 1, 2: -1}
    assert (prod.lo, prod.hi) == (0, 4)
    assert series_mul(TLS.monomial(-1, hi=3), TLS.monomial(1, hi=5)).coeffs == {0: 1}


def test_inverse_examples():
    inv = series_invert(TLS.from_list([1, -1], 0, 6))
    assert inv.coeffs == {k: 1 for k in range(6)}
    assert series_mul(inv, TLS.from_list([1, -1], 0, 6)).coeffs == {0: 1}
    z_inv = series_invert(TLS.monomial(1, hi=4))
    assert z_inv.coeffs == {-1: 1}
    assert series_invert(TLS({0: 2}, 0, 3)).coeffs == {0: Fraction(1, 2)}


def test_invert_rejects_zero_leading_coefficient():
    with pytest.raises(NotInvertibleError, match="not invertible"):
        series_invert(TLS({1: 1}, 0, 4))


def test_residue_examples():
    assert residue(TLS({-1: 1, 0: 3, 1: 1}, -1, 2)) == 1
    assert residue(TLS({0: 1}, -2, 2)) == 0
    assert residue(TLS({-1: 5}, -1, 0)) == 5
    with pytest.raises(WindowError, match="residue outside window"):
        residue(TLS({-3: 1}, -3, -1))
    # below the window start everything is zero, so the residue is known
    assert residue(TLS({0: 1}, 0, 3)) == 0


def test_window_underflow():
    with pytest.raises(WindowError, match="window underflow"):
        TLS({}, 2, 2)


def test_unknown_orders_raise():
    a = TLS({0: 1}, 0, 3)
    assert a[2] == 0
    with pytest.raises(WindowError):
        a[3]


def test_product_window_rule():
    a = TLS({}, -2, 3)
    b = TLS({}, 1, 2)
    c = series_mul(a, b)
    assert (c.lo, c.hi) == (-1, min(-2 + 2, 1 + 3))


@settings(max_examples=60, deadline=None)
@given(series(), series(), series())
def test_ring_laws_within_windows(a, b, c):
    left = series_mul(series_mul(a, b), c)
    right = series_mul(a, series_mul(b, c))
    assert left.agrees_with(right)
    dist = series_mul(a, b + c)
    assert dist.agrees_with(series_mul(a, b) + series_mul(a, c))
    assert series_mul(a, b).agrees_with(series_mul(b, a))


@settings(max_examples=60, deadline=None)
@given(series())
def test_inverse_is_two_sided(a):
    if a.valuation() != a.lo:
        return
    inv = series_invert(a)
    one = series_mul(a, inv)
    assert one.coeffs == {0: 1}
    assert series_mul(inv, a).coeffs == {0: 1}


def test_rational_format_round_trip():
    assert format_rational(Fraction(3)) == "3/1"
    assert parse_rational("-6/4") == Fraction(-3, 2)
    with pytest.raises(TypeError):
        TLS({0: 0.5}, 0, 1)


def test_series_json_round_trip():
    a = TLS({-1: Fraction(1, 3), 2: -4}, -1, 5)
    data = a.to_json()
    assert data == {"lo": -1, "hi": 5, "coeffs": {"-1": "1/3", "2": "-4/1"}}
    assert TLS.from_json(data) == a


def test_vector_laurent_basics():
    v = VectorLaurent.unit(2, 1, -1, -2, 3)
    assert v.entries() == {(1, -1): 1}
    assert VectorLaurent.from_json(v.to_json()) == v
    with pytest.raises(WindowError):
        VectorLaurent([TLS({}, 0, 1), TLS({}, 0, 2)])


def test_xpoly_arithmetic():
    p = XPoly([1, 2, 0, 0])
    assert p.coeffs == (1, 2)
    assert (p * p).coeffs == (1, 4, 4)
    assert p.derivative().coeffs == (2,)
    assert p.reflect().coeffs == (1, -2)
    assert p(3) == 7
