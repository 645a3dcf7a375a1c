import random
from fractions import Fraction

import pytest

from hitchin_kp import sampling
from hitchin_kp.errors import SpLocusError, TruncationError
from hitchin_kp.kp import (
    DressingOperator,
    FlowTimes,
    TDeformation,
    birkhoff_residual,
    dress,
    evolve,
    evolve_generators,
    kp_vector_field,
    sharp,
    sp_check,
    sp_evolve,
    sp_generators,
    sp_residual_series,
    vector_field_derivative,
)
from hitchin_kp.pdo import MatrixPDO, pdo_adjoint


def scalar(terms, floor=None):
    return MatrixPDO.scalar(terms, floor)


def test_dressing_operator_needs_a_floor():
    with pytest.raises(TruncationError):
        DressingOperator(scalar({0: 1, -1: 1}))
    S = DressingOperator(scalar({0: 1, -1: 1}), floor=-4)
    assert S.floor == -4
    assert DressingOperator(scalar({0: 1, -1: 1}, -4)) == S


def test_dress_examples():
    L = dress(DressingOperator(MatrixPDO.identity(2), floor=-3))
    assert L.equals_to_floor(MatrixPDO.diagonal_d(2, 1, [1, 1]))
    # S = 1 + x^2 D^-1:  L = D - 2x D^-1 + 2x^3 D^-2 + ...
    L = dress(scalar({0: 1, -1: [0, 0, 1]}, -6))
    assert L.coeff(1) == MatrixPDO.identity(1).coeff(0)
    assert L.entry(0, 0).terms[-1] == (((0, -2),),)
    assert L.entry(0, 0).terms[-2] == (((0, 0, 0, 2),),)


def test_lax_operator_has_no_constant_term():
    rng = random.Random(1)
    for _ in range(10):
        S = sampling.monic(rng, rng.randint(1, 2), -5, 2)
        L = dress(S)
        assert 0 not in L.terms


def test_vector_field_example():
    S = scalar({0: 1, -1: [0, 0, 1]}, -6)
    V = kp_vector_field(S, 1, 2)
    # for S = 1 + a D^-1 the D^-1 coefficient moves by a'' - 2 a a'
    assert V.entry(0, 0).terms[-1] == (((2, 0, 0, -4),),)
    assert V.order_lo == -4


def test_vector_field_of_first_flow_is_x_derivative():
    rng = random.Random(3)
    for _ in range(10):
        S = sampling.monic(rng, 1, -5, 3)
        V = kp_vector_field(S, 1, 1)
        # S D S^-1 = D - S_x S^-1, so the first flow is translation in x
        assert V.equals_to_floor(S.x_derivative())


def test_vector_field_errors():
    S = scalar({0: 1, -1: 1}, -2)
    with pytest.raises(TruncationError):
        kp_vector_field(S, 1, 3)
    with pytest.raises(ValueError):
        kp_vector_field(S, 2, 1)
    with pytest.raises(ValueError):
        kp_vector_field(S, 1, 0)


def test_flow_times_parsing():
    t = FlowTimes({"1,2": 1, (2, 1): 1}, t_cap=2)
    assert t.labels == [(1, 2), (2, 1)]
    assert FlowTimes.from_json(t.to_json()).labels == t.labels
    with pytest.raises(ValueError):
        FlowTimes({"x": 1})
    with pytest.raises(ValueError):
        FlowTimes({}, t_cap=-1)


def test_evolve_without_times_is_constant():
    S0 = scalar({0: 1, -1: 1}, -4)
    S, Y = evolve(S0, FlowTimes({}, 2))
    assert S.base == S0
    assert Y.base == MatrixPDO.identity(1)
    assert all(not k or S[k].is_zero() for k in S.coeffs)


def test_evolve_identity_stays_identity():
    S, Y = evolve(DressingOperator(MatrixPDO.identity(2), floor=-8), FlowTimes({"1,2": 1}, 3))
    for e, coeff in S.coeffs.items():
        if sum(e):
            assert coeff.is_zero()
    # Y(t) = exp(t E_11 D^2)
    assert Y[(2,)] == MatrixPDO.elementary(2, 0, 0, 4, Fraction(1, 2))


def test_evolve_first_and_second_order():
    rng = random.Random(5)
    for _ in range(5):
        S0 = sampling.monic(rng, 2, -6, 2)
        S, _ = evolve(S0, FlowTimes({"2,2": 1}, 2))
        V = kp_vector_field(S0, 2, 2)
        assert S[(1,)].equals_to_floor(V)
        # second t-coefficient is half the derivative of the field along itself
        second = vector_field_derivative(S0, 2, 2, V).scale(Fraction(1, 2))
        assert S[(2,)].equals_to_floor(second)


def test_birkhoff_residual_vanishes():
    rng = random.Random(6)
    for _ in range(5):
        S0 = sampling.monic(rng, 2, -6, 2)
        gens = [MatrixPDO.elementary(2, 0, 0, 1), MatrixPDO.elementary(2, 1, 1, 2)]
        S, Y = evolve_generators(S0, gens, 2)
        assert birkhoff_residual(S0, gens, S, Y).is_zero()


def test_flows_commute():
    rng = random.Random(7)
    for _ in range(5):
        S0 = sampling.monic(rng, 2, -7, 2)
        Va = kp_vector_field(S0, 1, 2)
        Vb = kp_vector_field(S0, 2, 1)
        lhs = vector_field_derivative(S0, 2, 1, Va)
        rhs = vector_field_derivative(S0, 1, 2, Vb)
        assert lhs.equals_to_floor(rhs)


def test_evolve_reports_shallow_floor():
    S0 = scalar({0: 1, -1: [0, 1]}, -2)
    with pytest.raises(TruncationError):
        evolve(S0, FlowTimes({"1,3": 1}, 2))


def test_t_series_algebra_and_json():
    S0 = scalar({0: 1, -1: [0, 1]}, -5)
    S, Y = evolve(S0, FlowTimes({"1,1": 1, "1,2": 1}, 2))
    one = S @ S.inverse()
    for e, c in one.coeffs.items():
        assert c.equals_to_floor(MatrixPDO.identity(1) if not sum(e) else MatrixPDO.zero(1))
    back = TDeformation.from_json(S.to_json())
    assert back.equals_to_floor(S)
    assert (S - S).is_zero()
    at_zero = S.evaluate({(1, 1): 0, (1, 2): 0})
    assert at_zero.equals_to_floor(S0)


def test_sharp_is_an_anti_involution():
    rng = random.Random(8)
    for _ in range(10):
        P = sampling.pdo(rng, 4, -2, 2, 2)
        Q = sampling.pdo(rng, 4, -2, 2, 2)
        assert sharp(sharp(P)) == P
        assert sharp(P @ Q) == sharp(Q) @ sharp(P)


def test_sp_seed_lands_on_the_locus():
    rng = random.Random(9)
    for m in (1, 2):
        S = sampling.sp_dressing(rng, m, -4)
        cert = sp_check(S, m)
        assert cert.ok and cert.lax_ok
        assert all(cert.blocks.values())
    # the identity is on the locus
    assert sp_check(DressingOperator(MatrixPDO.identity(2), floor=-3), 1).ok


def test_sp_check_rejects_generic_operator():
    S = MatrixPDO(2, {0: [[1, 0], [0, 1]], -1: [[1, 0], [0, 0]]}, -4)
    assert not sp_check(S, 1).ok
    with pytest.raises(SpLocusError, match="not on the Sp locus"):
        sp_evolve(S, FlowTimes({"1,1": 1}, 1))
    with pytest.raises(ValueError):
        sp_check(scalar({0: 1}, -3), 1)


def test_sp_generators():
    (g,) = sp_generators(1, [(1, 2)])
    assert g == MatrixPDO.elementary(2, 0, 0, 2) - MatrixPDO.elementary(2, 1, 1, 2)
    assert sharp(g) == g.scale(-1)
    with pytest.raises(ValueError):
        sp_generators(1, [(2, 1)])


def test_sp_flows_preserve_the_locus_and_control_breaks_it():
    rng = random.Random(10)
    S0 = sampling.sp_dressing(rng, 1, -5)
    times = FlowTimes({"1,1": 1, "1,2": 1}, 2)
    assert sp_residual_series(sp_evolve(S0, times)).is_zero()
    broken = sp_residual_series(sp_evolve(S0, times, sign=+1))
    assert not broken.is_zero()


def test_adjoint_of_t_series():
    S0 = scalar({0: 1, -1: [1, 1]}, -4)
    S, _ = evolve(S0, FlowTimes({"1,1": 1}, 1))
    assert S.adjoint().base == pdo_adjoint(S0)


def test_flow_moves_the_point_by_the_multiplier():
    # d/dt from_dressing(S(t)) at t = 0 is w -> E_ii z^-j w modulo W
    from hitchin_kp.grassmann import from_dressing, kp_tangent, make_point
    from hitchin_kp.pdo import pdo_act, pdo_invert_monic
    from hitchin_kp.series import VectorLaurent

    rng = random.Random(14)
    M = N = 3
    for i, j in ((1, 1), (1, 2), (2, 2)):
        S0 = sampling.monic(rng, 2, -10, 2, depth=2)
        Sinv = pdo_invert_monic(S0, -10)
        velocity = (Sinv @ kp_vector_field(S0, i, j) @ Sinv).scale(-1)
        multiplier = MatrixPDO.elementary(2, i - 1, i - 1, j)
        W0 = from_dressing(S0, M, N)
        diffs = []
        for comp in range(2):
            for k in range(1, M + 1):
                h = VectorLaurent.unit(2, comp, -k, -k, 20)
                d = pdo_act(velocity, h) - pdo_act(multiplier @ Sinv, h)
                diffs.append({key: c for key, c in d.entries().items() if key[1] < N})
        assert make_point(2, M, N, list(W0.generators) + diffs) == W0
        a = VectorLaurent.unit(2, i - 1, -j, -j, 20)
        assert not kp_tangent(a, from_dressing(S0, 5, 5)).is_zero()
