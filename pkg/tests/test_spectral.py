import random
from fractions import Fraction

import pytest
import sympy

from hitchin_kp import sampling
from hitchin_kp.errors import IrrationalBranchError, RamifiedError
from hitchin_kp.spectral import (
    HiggsMatrix,
    HitchinPoint,
    LaurentPoly,
    QuadraticNumber,
    branch_product,
    hensel_split,
    hitchin_map,
    numerology,
    ramification_resultant,
    self_dual_degree,
    serre_dual_point,
    sp_membership,
    sylvester_matrix,
    weighted_scale,
)

w = LaurentPoly.w()
ZERO = LaurentPoly()


def lp(*coeffs):
    return LaurentPoly(dict(enumerate(coeffs)))


def test_laurent_poly_arithmetic():
    p = LaurentPoly({-1: 1, 2: Fraction(1, 2)})
    assert (p * p).coeff(1) == 1
    assert (p - p).is_zero()
    assert LaurentPoly.from_json(p.to_json()) == p
    assert (w ** 3)(2) == 8


def test_hitchin_map_examples():
    a, b = lp(1, 2), LaurentPoly({-1: 3})
    s = hitchin_map(HiggsMatrix([[a, ZERO], [ZERO, b]]))
    assert s == HitchinPoint([-(a + b), a * b])
    s = hitchin_map(HiggsMatrix([[ZERO, lp(1)], [w, ZERO]]))
    assert s == HitchinPoint([ZERO, -w])
    assert hitchin_map(HiggsMatrix([[ZERO] * 3 for _ in range(3)])) == HitchinPoint([ZERO] * 3)


def test_hitchin_map_matches_sympy_determinant():
    rng = random.Random(31)
    x, W = sympy.symbols("x w")
    for _ in range(15):
        n = rng.randint(1, 4)
        phi = sampling.higgs(rng, n, 0, 2)
        mat = sympy.Matrix(n, n, lambda i, j: sum(
            sympy.Rational(c.numerator, c.denominator) * W ** k for k, c in phi.entries[i][j].terms.items()))
        char = sympy.Poly((x * sympy.eye(n) - mat).det(), x)
        s = hitchin_map(phi)
        for i in range(1, n + 1):
            expect = sympy.expand(char.coeff_monomial(x ** (n - i)))
            got = sum(sympy.Rational(c.numerator, c.denominator) * W ** k for k, c in s[i - 1].terms.items())
            assert sympy.expand(got - expect) == 0


def test_weighted_scale_examples():
    s = HitchinPoint([ZERO, -w])
    assert weighted_scale(1, s) == s
    assert weighted_scale(2, s) == HitchinPoint([ZERO, -4 * w])
    rng = random.Random(2)
    for _ in range(20):
        phi = sampling.higgs(rng, rng.randint(1, 3))
        lam = sampling.nonzero_rational(rng)
        assert hitchin_map(phi.scale(lam)) == weighted_scale(lam, hitchin_map(phi))


def test_serre_dual_examples():
    s1, s2, s3 = lp(1), lp(0, 2), lp(3, 0, 1)
    assert serre_dual_point(HitchinPoint([s1, s2])) == HitchinPoint([-s1, s2])
    assert serre_dual_point(HitchinPoint([s1, s2, s3])) == HitchinPoint([-s1, s2, -s3])
    rng = random.Random(4)
    for _ in range(20):
        phi = sampling.higgs(rng, rng.randint(1, 3))
        s = hitchin_map(phi)
        assert serre_dual_point(serre_dual_point(s)) == s
        assert hitchin_map(phi.transpose().scale(-1)) == serre_dual_point(s)


def test_sp_membership():
    assert sp_membership(HitchinPoint([ZERO, w]))
    assert not sp_membership(HitchinPoint([lp(1), w]))
    assert sp_membership(HitchinPoint([ZERO, w, ZERO, lp(1, 1)]))
    with pytest.raises(ValueError):
        sp_membership(HitchinPoint([w]))


def test_resultant_examples():
    s1, s2 = LaurentPoly.w(1, 1) + lp(2), LaurentPoly.w(2, 3)
    assert ramification_resultant(HitchinPoint([ZERO, s2])) == 4 * s2
    assert ramification_resultant(HitchinPoint([s1, s2])) == 4 * s2 - s1 * s1
    r = ramification_resultant(HitchinPoint([ZERO, -w]))
    assert r == -4 * w
    assert r(0) == 0


def test_sylvester_shape():
    mat = sylvester_matrix([lp(1), ZERO, w], [lp(2), ZERO])
    assert len(mat) == 3 and all(len(row) == 3 for row in mat)


def test_resultant_matches_sympy_discriminant():
    rng = random.Random(7)
    x = sympy.symbols("x")
    for _ in range(10):
        n = rng.randint(2, 4)
        coeffs = [Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(n)]
        s = HitchinPoint([LaurentPoly.const(c) for c in coeffs])
        poly = x ** n + sum(sympy.Rational(c.numerator, c.denominator) * x ** (n - 1 - i) for i, c in enumerate(coeffs))
        expect = sympy.resultant(poly, sympy.diff(poly, x), x)
        got = ramification_resultant(s).coeff(0)
        assert sympy.Rational(got.numerator, got.denominator) == expect


def test_resultant_weighted_degree():
    # s_i homogeneous of weight i in (lam) -> resultant homogeneous of weight n(n-1)
    rng = random.Random(9)
    for n in (2, 3):
        s = HitchinPoint([LaurentPoly.w(i + 1, sampling.nonzero_rational(rng)) for i in range(n)])
        r = ramification_resultant(s)
        lam = Fraction(3)
        assert ramification_resultant(weighted_scale_in_w(s, lam)) == scale_w(r, lam, n * (n - 1))


def weighted_scale_in_w(s, lam):
    return HitchinPoint([LaurentPoly({k: c * lam ** k for k, c in v.terms.items()}) for v in s.s])


def scale_w(p, lam, weight):
    out = LaurentPoly({k: c * lam ** k for k, c in p.terms.items()})
    assert all(k == weight for k in p.terms)
    return out


def test_hensel_exact_factorization():
    a, b = hensel_split(HitchinPoint([ZERO, -(lp(1, 1) * lp(1, 1))]), 5)
    branches = sorted([[c.a for c in a], [c.a for c in b]])
    assert branches == [[-1, -1, 0, 0, 0], [1, 1, 0, 0, 0]]


def test_hensel_square_root_series():
    a, b = hensel_split(HitchinPoint([ZERO, -lp(1, 1)]), 5)
    plus = a if a[0] == QuadraticNumber(1) else b
    # binomial series of sqrt(1 + z)
    assert [c.a for c in plus] == [1, Fraction(1, 2), Fraction(-1, 8), Fraction(1, 16), Fraction(-5, 128)]
    prod = branch_product([a, b], 5)
    assert [c.a for c in prod[2]] == [-1, -1, 0, 0, 0]


def test_hensel_errors():
    with pytest.raises(RamifiedError, match="ramified at p"):
        hensel_split(HitchinPoint([ZERO, -w]), 4)
    with pytest.raises(IrrationalBranchError, match="irrational branch"):
        hensel_split(HitchinPoint([ZERO, lp(-2, 1)]), 4)
    with pytest.raises(ValueError):
        hensel_split(HitchinPoint([LaurentPoly({-1: 1}), ZERO]), 4)


def test_hensel_with_square_roots():
    s = HitchinPoint([ZERO, lp(-2, 1)])
    a, b = hensel_split(s, 4, allow_sqrt=True)
    assert a[0] * a[0] == QuadraticNumber(2)
    prod = branch_product([a, b], 4)
    assert [c for c in prod[2]] == [QuadraticNumber(-2), QuadraticNumber(1), QuadraticNumber(0), QuadraticNumber(0)]


def test_hensel_products_reproduce_the_polynomial():
    rng = random.Random(13)
    done = 0
    while done < 10:
        n = rng.randint(2, 3)
        roots = [Fraction(rng.randint(-4, 4)) for _ in range(n)]
        if len(set(roots)) < n:
            continue
        factors = [lp(-r, sampling.rational(rng), sampling.rational(rng)) for r in roots]
        poly = [lp(1)]
        for f in factors:
            poly = [p - f * q for p, q in zip(poly + [ZERO], [ZERO] + poly)]
        s = HitchinPoint(poly[1:])
        branches = hensel_split(s, 6)
        prod = branch_product(branches, 6)
        for i in range(1, n + 1):
            assert [c.a for c in prod[i]] == [s[i - 1].coeff(k) for k in range(6)]
            assert all(c.b == 0 for c in prod[i])
        done += 1


def test_numerology_examples():
    r = numerology(2, 2, 2)
    assert (r.dim_VGL, r.genus_Cs, r.delta, r.deg_LE, r.serre_dual_degree) == (5, 5, 8, 4, 2)
    assert r.dim_VSL == 3
    assert numerology(3, 2, 0).delta == 1944
    r = numerology(2, 2, m=1)
    assert (r.genus_Cs_prime, r.dim_VSp) == (2, 3)
    assert self_dual_degree(2, 2) == 2
    assert "dim_VSp" not in numerology(2, 2).to_json()


def test_numerology_coherence():
    for n in range(1, 5):
        for g in range(2, 5):
            for d in range(-3, 4):
                r = numerology(n, g, d)
                assert r.dim_VGL == r.genus_Cs
                assert numerology(n, g, r.serre_dual_degree).serre_dual_degree == d
            sd = self_dual_degree(n, g)
            assert numerology(n, g, sd).serre_dual_degree == sd


def test_numerology_errors():
    with pytest.raises(ValueError):
        numerology(2, 1)
    with pytest.raises(ValueError):
        numerology(3, 2, m=1)


def test_json_round_trips():
    phi = HiggsMatrix([[w, lp(1)], [ZERO, LaurentPoly({-1: Fraction(2, 3)})]])
    assert HiggsMatrix.from_json(phi.to_json()).entries == phi.entries
    s = hitchin_map(phi)
    assert HitchinPoint.from_json(s.to_json()) == s
    with pytest.raises(ValueError):
        HiggsMatrix.from_json({"n": 3, "entries": [[{}]]})
