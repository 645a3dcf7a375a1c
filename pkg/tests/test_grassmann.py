import random
from fractions import Fraction

import pytest
import sympy

from hitchin_kp import sampling
from hitchin_kp.errors import BigCellError, WindowError
from hitchin_kp.grassmann import (
    GammaElement,
    GrassmannPoint,
    fredholm_data,
    from_dressing,
    gamma_act,
    kp_tangent,
    make_point,
    perp,
    quotient_equal,
    standard_point,
    to_dressing,
)
from hitchin_kp.pdo import MatrixPDO, pairing
from hitchin_kp.series import TruncatedLaurentSeries as TLS, VectorLaurent, series_invert


def test_standard_point():
    W = standard_point(2, 2, 3)
    assert W.dim == 4
    data = fredholm_data(W)
    assert data.kernel_basis == [] and data.cokernel_basis == [] and data.index == 0
    assert W == standard_point(2)
    assert W.widen(4, 4) == W


def test_make_point_and_fredholm_data():
    W = make_point(1, 2, 2, [{(0, -2): 1, (0, 0): 1}, {(0, 1): 1}])
    assert W.dim == 2
    data = fredholm_data(W)
    assert data.cokernel_basis == [(0, -1)]
    assert len(data.kernel_basis) == 1
    assert data.kernel_basis[0].entries() == {(0, 1): 1}
    assert data.index == 0


def test_make_point_rejects_support_above_window():
    with pytest.raises(WindowError):
        make_point(1, 1, 1, [{(0, 1): 1}])


def test_tail_is_reduced_away():
    W = make_point(1, 1, 2, [{(0, -3): 1, (0, 0): 2}])
    assert W == make_point(1, 1, 2, [{(0, 0): 1}])


def test_perp_examples():
    W = make_point(1, 2, 2, [{(0, -2): 1, (0, 0): 1}, {(0, 1): 1}])
    P = perp(W)
    assert (P.M, P.N) == (2, 2)
    assert P == make_point(1, 2, 2, [{(0, -1): 1, (0, 1): -1}, {(0, 0): 1}])
    assert perp(standard_point(2, 2, 2)) == standard_point(2, 2, 2)


def test_perp_is_orthogonal_and_maximal():
    rng = random.Random(21)
    for _ in range(25):
        n, M, N = rng.randint(1, 2), rng.randint(0, 3), rng.randint(0, 3)
        W = sampling.point(rng, n, M, N)
        P = perp(W)
        for v in W.generators:
            for w in P.generators:
                assert pairing(v, w) == 0
        assert perp(P) == W
        assert W.dim + P.dim == n * (M + N)


def test_perp_matches_sympy_nullspace():
    rng = random.Random(4)
    for _ in range(15):
        n, M, N = rng.randint(1, 2), rng.randint(1, 3), rng.randint(1, 3)
        W = sampling.point(rng, n, M, N)
        size = n * (M + N)
        # the pairing matrix: <e^i z^k, e^j z^l> = [i == j][k + l == -1]
        dual = GrassmannPoint(n, N, M, [], [])
        gram = []
        for row in W.basis:
            out = [0] * size
            for q, c in enumerate(row):
                if c:
                    i, k = W.position(q)
                    out[dual.index_of(i, -1 - k)] = c
            gram.append(out)
        if gram:
            null = sympy.Matrix(gram).nullspace()
            rows = [[Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in v] for v in null]
        else:
            rows = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
        expect = make_point(n, N, M, [
            {dual.position(q): c for q, c in enumerate(r) if c} for r in rows
        ])
        assert perp(W) == expect


def test_from_dressing_matches_series_inverse():
    c = Fraction(2)
    W = from_dressing(MatrixPDO.scalar({0: 1, -1: c}), 3, 3)
    inv = series_invert(TLS({0: 1, 1: c}, 0, 4))
    first = {(0, k - 1): v for k, v in inv.items() if k - 1 < 3}
    expect = make_point(1, 3, 3, [{(0, -3): 1}, {(0, -2): 1}, first])
    assert W == expect
    assert first == {(0, -1): 1, (0, 0): -2, (0, 1): 4, (0, 2): -8}


def test_from_dressing_needs_a_deep_enough_operator():
    S = MatrixPDO.scalar({0: 1, -1: 1}, -3)
    with pytest.raises(WindowError, match="window too small"):
        from_dressing(S, 2, 3)
    assert from_dressing(S, 2, 2).dim == 2


def test_to_dressing_examples():
    I = to_dressing(standard_point(2, 2, 2))
    assert I.equals_to_floor(MatrixPDO.identity(2))
    S = MatrixPDO.scalar({0: 1, -1: 2})
    back = to_dressing(from_dressing(S, 3, 3))
    assert back.order_lo == -5
    assert back.equals_to_floor(S)


def test_to_dressing_outside_big_cell():
    K = make_point(1, 1, 1, [{(0, 0): 1}])
    with pytest.raises(BigCellError, match="big-cell violation"):
        to_dressing(K)


def test_dressing_round_trip_on_points():
    rng = random.Random(8)
    for _ in range(10):
        n = rng.randint(1, 2)
        S = sampling.monic(rng, n, -7, 2)
        W = from_dressing(S, 4, 4)
        assert from_dressing(to_dressing(W), 4, 4) == W
        # recovered exactly on shifts up to min(M, N)
        assert to_dressing(W).truncate_shift(4) == S.truncate_shift(4)


def test_dressing_and_perp_commute_with_adjoint():
    from hitchin_kp.pdo import pdo_adjoint, pdo_invert_monic
    rng = random.Random(2)
    for _ in range(10):
        n = rng.randint(1, 2)
        S = sampling.monic(rng, n, -7, 2)
        dual = pdo_invert_monic(pdo_adjoint(S), -7)
        assert perp(from_dressing(S, 4, 4)) == from_dressing(dual, 4, 4)


def test_quotient_equal_example():
    W = standard_point(1, 2, 2)
    target = make_point(1, 2, 2, [{(0, -1): 1, (0, 0): 1}, {(0, -2): 1, (0, -1): 1}])
    gamma = quotient_equal(W, target)
    assert gamma is not None
    assert gamma.diag[0].coeffs == {0: 1, 1: 1}
    assert gamma_act(gamma, W) == target


def test_quotient_equal_rejects_different_fredholm_data():
    W = standard_point(1, 2, 2)
    K = make_point(1, 2, 2, [{(0, -2): 1}, {(0, -1): 1}, {(0, 0): 1}])
    assert quotient_equal(W, K) is None
    assert quotient_equal(W, standard_point(2, 2, 2)) is None


def test_quotient_equal_on_gauge_orbits():
    rng = random.Random(12)
    for _ in range(10):
        n = rng.randint(1, 2)
        W = sampling.point(rng, n, 2, 2)
        diag = [TLS({0: 1, **{e: sampling.rational(rng) for e in range(1, 4)}}, 0, 4) for _ in range(n)]
        V = gamma_act(GammaElement(diag), W)
        gamma = quotient_equal(W, V)
        assert gamma is not None
        assert gamma_act(gamma, W) == V


def test_gamma_element_validation():
    with pytest.raises(ValueError):
        GammaElement([TLS({0: 1}, 0, 2), TLS({0: 2}, 0, 2)])
    with pytest.raises(ValueError):
        GammaElement([TLS({1: 1}, 0, 2)])


def test_kp_tangent_examples():
    a = VectorLaurent([TLS({-2: 1}, -2, 20)])
    assert kp_tangent(a, standard_point(1, 3, 3)).is_zero()
    W = from_dressing(MatrixPDO.scalar({0: 1, -1: [0, 3]}), 4, 4)
    assert not kp_tangent(a, W).is_zero()


def test_kp_tangent_constant_multiplier_is_zero():
    rng = random.Random(6)
    for _ in range(10):
        W = sampling.point(rng, 2, 2, 2)
        a = VectorLaurent([TLS({0: 1, 1: 2}, 0, 10), TLS({0: 1}, 0, 10)])
        assert kp_tangent(a, W).is_zero()


def test_kp_tangent_window_errors():
    W = standard_point(1, 1, 1)
    with pytest.raises(WindowError, match="window underflow"):
        kp_tangent(VectorLaurent([TLS({-3: 1}, -3, 10)]), W)
    with pytest.raises(ValueError):
        kp_tangent(VectorLaurent([TLS({-1: 1}, -1, 10)] * 2), W)


def test_point_json_round_trip():
    W = make_point(2, 1, 2, [{(0, -1): Fraction(1, 2), (1, 1): 3}])
    data = W.to_json()
    assert GrassmannPoint.from_json(data) == W
    with pytest.raises(ValueError):
        GrassmannPoint.from_json({"n": 1})
