"""Named property suites over seeded random populations.

Each suite returns a list of ``PropertyResult``; the command line and the
acceptance tests both run these.  Independent oracles used here (reduction
by word rewriting, Leibniz determinants, sympy gcds) share no code with the
routines they check.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import sympy

from . import sampling
from .errors import IrrationalBranchError, RamifiedError
from .grassmann import fredholm_data, from_dressing, perp, to_dressing
from .kp import (
    DressingOperator,
    FlowTimes,
    birkhoff_residual,
    dress,
    evolve,
    kp_vector_field,
    sp_check,
    sp_evolve,
    sp_residual_series,
    vector_field_derivative,
)
from .pdo import MatrixPDO, pairing, pdo_act, pdo_adjoint, pdo_invert_monic, pdo_rho
from .spectral import (
    HiggsMatrix,
    HitchinPoint,
    LaurentPoly,
    branch_product,
    hensel_split,
    hitchin_map,
    numerology,
    ramification_resultant,
    self_dual_degree,
    serre_dual_point,
    weighted_scale,
)

__all__ = ["PropertyResult", "SUITES", "run_suite", "rho_by_rewriting", "charpoly_by_leibniz"]


@dataclass
class PropertyResult:
    """Outcome of one property over a population."""

    name: str
    checked: int = 0
    failed: int = 0
    passed: bool | None = None
    note: str = ""
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, detail=None):
        self.checked += 1
        if not ok:
            self.failed += 1
            if len(self.failures) < 5:
                self.failures.append(detail)

    def finish(self, started: float | None = None) -> "PropertyResult":
        if self.passed is None:
            self.passed = self.checked > 0 and self.failed == 0
        if started is not None:
            self.seconds = time.perf_counter() - started
        return self

    def line(self, timing: bool = True) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.note})" if self.note else ""
        clock = f" in {self.seconds:.2f}s" if timing else ""
        return f"{status} {self.name}: {self.checked - self.failed}/{self.checked} ok{clock}{extra}"

    def to_json(self) -> dict:
        # no timings here: reports must be reproducible byte for byte
        return {"name": self.name, "passed": bool(self.passed), "checked": self.checked,
                "failed": self.failed, "note": self.note,
                "failures": [str(f) for f in self.failures]}


# -- independent oracles -------------------------------------------------------------


def rho_by_rewriting(P: MatrixPDO) -> dict:
    """Projection mod the left ideal of ``x`` by rewriting words.

    A word ``c x^k D^l x^r`` is rewritten with ``x D^l = D^l x - l D^(l-1)``
    until no ``x`` stands left of ``D``; words ending in ``x`` are dropped.
    Returns ``{(row, col): {order: value}}``.
    """
    out = {}
    for ell, mat in P.terms.items():
        for r, row in enumerate(mat):
            for s, e in enumerate(row):
                for k, c in enumerate(e):
                    if not c:
                        continue
                    stack = [(Fraction(c), k, ell, 0)]
                    while stack:
                        coef, kk, ll, rr = stack.pop()
                        if kk == 0:
                            if rr == 0:
                                acc = out.setdefault((r, s), {})
                                acc[ll] = acc.get(ll, Fraction(0)) + coef
                            continue
                        stack.append((coef, kk - 1, ll, rr + 1))
                        if ll != 0:
                            stack.append((-ll * coef, kk - 1, ll - 1, rr))
    return {key: {o: v for o, v in d.items() if v} for key, d in out.items()}


def _rho_as_dict(P: MatrixPDO) -> dict:
    out = {}
    for r, row in enumerate(pdo_rho(P)):
        for s, ser in enumerate(row):
            d = {-u: v for u, v in ser.items()}
            if d:
                out[(r, s)] = d
    return out


def charpoly_by_leibniz(phi: HiggsMatrix) -> list[LaurentPoly]:
    """Coefficients (leading first) of ``det(x - Phi)`` by the permutation expansion."""
    n = phi.n
    total = [LaurentPoly() for _ in range(n + 1)]  # index = power of x
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = [LaurentPoly.const(1)]
        for i in range(n):
            j = perm[i]
            # entry of x*I - Phi as polynomial in x
            factor = [-phi.entries[i][j]] + ([LaurentPoly.const(1)] if i == j else [])
            new = [LaurentPoly() for _ in range(len(prod) + len(factor) - 1)]
            for a, pa in enumerate(prod):
                for b, fb in enumerate(factor):
                    new[a + b] = new[a + b] + pa * fb
            prod = new
        sign = -1 if inv % 2 else 1
        for p, c in enumerate(prod):
            total[p] = total[p] + c * sign
    return list(reversed(total))


def _sympy_poly(coeffs):
    x = sympy.Symbol("x")
    return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in coeffs], x, domain="QQ"), x


# -- suites ------------------------------------------------------------------------


def suite_adjoint_formula(seed=0, count=200, n=None, d_lo=-6, d_hi=4, x_cap=6, z_lo=-8, z_hi=8, **_):
    rng = random.Random(seed)
    res = PropertyResult("<f, P g> = <P* f, g>")
    t0 = time.perf_counter()
    hi = z_hi + 2 * (x_cap + max(d_hi, 0)) + 8
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2, 3))
        P = sampling.pdo(rng, size, d_lo, d_hi, x_cap)
        f = sampling.laurent_vector(rng, size, z_lo, z_hi, hi)
        g = sampling.laurent_vector(rng, size, z_lo, z_hi, hi)
        lhs = pairing(f, pdo_act(P, g))
        rhs = pairing(pdo_act(pdo_adjoint(P), f), g)
        res.record(lhs == rhs, (lhs, rhs))
    return [res.finish(t0)]


def suite_adjoint_algebra(seed=0, count=200, n=None, d_lo=-6, d_hi=4, x_cap=6, **_):
    rng = random.Random(seed)
    inv = PropertyResult("(P*)* = P")
    anti = PropertyResult("(PQ)* = Q* P*")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2, 3))
        P = sampling.pdo(rng, size, d_lo, d_hi, x_cap)
        Q = sampling.pdo(rng, size, d_lo, d_hi, x_cap)
        inv.record(pdo_adjoint(pdo_adjoint(P)) == P)
        anti.record(pdo_adjoint(P @ Q) == pdo_adjoint(Q) @ pdo_adjoint(P))
    return [inv.finish(t0), anti.finish(t0)]


def suite_rho_oracle(seed=0, count=100, n=None, d_lo=-6, d_hi=4, x_cap=6, **_):
    rng = random.Random(seed)
    res = PropertyResult("rho = reduction by rewriting")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2, 3))
        P = sampling.pdo(rng, size, d_lo, d_hi, x_cap)
        res.record(_rho_as_dict(P) == rho_by_rewriting(P))
    return [res.finish(t0)]


def suite_perp_involution(seed=0, count=100, n=None, M=None, N=None, max_window=5, **_):
    rng = random.Random(seed)
    inv = PropertyResult("perp(perp(W)) = W")
    dims = PropertyResult("kernel/cokernel swap, index negates")
    orth = PropertyResult("<f, w> = 0 on generators")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2))
        MM = M if M is not None else rng.randint(0, max_window)
        NN = N if N is not None else rng.randint(0, max_window)
        W = sampling.point(rng, size, MM, NN)
        Wp = perp(W)
        inv.record(perp(Wp) == W)
        a, b = fredholm_data(W), fredholm_data(Wp)
        dims.record(len(b.kernel_basis) == len(a.cokernel_basis)
                    and len(b.cokernel_basis) == len(a.kernel_basis)
                    and b.index == -a.index)
        # windows [-N, M) and [-M, N) make every product known through order -1
        orth.record(all(pairing(f, w) == 0 for f in Wp.generators for w in W.generators))
    return [inv.finish(t0), dims.finish(t0), orth.finish(t0)]


def suite_bigcell_duality(seed=0, count=50, n=None, floor=-5, M=None, N=None, x_cap=2, **_):
    rng = random.Random(seed)
    dual = PropertyResult("perp(W(S)) = W((S*)^-1)")
    back = PropertyResult("from_dressing(to_dressing(W)) = W")
    recov = PropertyResult("to_dressing(W(S)) = S on shifts <= min(M,N)")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2))
        total = rng.randint(2, 1 - floor)
        MM = M if M is not None else rng.randint(1, total - 1)
        NN = N if N is not None else total - MM
        S = sampling.monic(rng, size, floor, x_cap)
        W = from_dressing(S, MM, NN)
        Sd = pdo_invert_monic(pdo_adjoint(S))
        dual.record(perp(W) == from_dressing(Sd, NN, MM))
        T = to_dressing(W)
        back.record(from_dressing(T, MM, NN) == W)
        k = min(MM, NN)
        recov.record(T.truncate_shift(k) == S.truncate_shift(k))
    return [dual.finish(t0), back.finish(t0), recov.finish(t0)]


def suite_lax_normalization(seed=0, count=100, n=None, floor=-4, x_cap=2, **_):
    rng = random.Random(seed)
    res = PropertyResult("dress(S) = I D + O(D^-1)")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or rng.randint(1, 4)
        S = sampling.monic(rng, size, floor, x_cap, density=0.5)
        try:
            L = dress(S)
        except AssertionError as exc:
            res.record(False, str(exc))
            continue
        ok = max(L.terms) == 1 and L.terms[1] == MatrixPDO.identity(size).terms[0] and 0 not in L.terms
        res.record(ok)
    return [res.finish(t0)]


def suite_kp_flows(seed=0, count=50, n=None, floor=-6, x_cap=2, mixed_count=20, birkhoff_floor=-8, **_):
    rng = random.Random(seed)
    t1 = PropertyResult("t1 flow: dS/dt = dS/dx")
    comm = PropertyResult("mixed t_a t_b coefficient (both orders)")
    birk = PropertyResult("Birkhoff residual through t^3, Y differential")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or sampling.choose(rng, (1, 2, 3))
        S = DressingOperator(sampling.monic(rng, size, floor, x_cap))
        total = MatrixPDO.zero(size)
        for i in range(1, size + 1):
            total = total + kp_vector_field(S, i, 1)
        t1.record(total.equals_to_floor(S.S.x_derivative()) and total.order_lo <= -1)
    t1.finish(t0)
    t0 = time.perf_counter()
    for _ in range(mixed_count):
        size = n or sampling.choose(rng, (1, 2))
        S = DressingOperator(sampling.monic(rng, size, floor, x_cap))
        a = (rng.randint(1, size), rng.randint(1, 2))
        b = (rng.randint(1, size), rng.randint(1, 2))
        while b == a:
            b = (rng.randint(1, size), rng.randint(1, 2))
        St, _ = evolve(S, FlowTimes({a: 0, b: 0}, 2))
        la, lb = St.labels.index(a), St.labels.index(b)
        e = [0, 0]
        e[la] += 1
        e[lb] += 1
        mixed = St[tuple(e)]
        va, vb = kp_vector_field(S, *a), kp_vector_field(S, *b)
        ab = vector_field_derivative(S, *a, vb)
        ba = vector_field_derivative(S, *b, va)
        comm.record(mixed.equals_to_floor(ab) and mixed.equals_to_floor(ba) and ab.equals_to_floor(ba)
                    and mixed.order_lo <= -1)
    comm.finish(t0)
    t0 = time.perf_counter()
    for size in ((n,) if n else (1, 2)):
        for _ in range(2):
            S = DressingOperator(sampling.monic(rng, size, birkhoff_floor, 1, depth=3))
            labels = [(1, 1), (size, 2)] if size > 1 else [(1, 1), (1, 2)]
            St, Y = evolve(S, FlowTimes({l: 0 for l in labels}, 3))
            gens = [MatrixPDO.elementary(size, i - 1, i - 1, j) for i, j in labels]
            R = birkhoff_residual(S, gens, St, Y)
            ydiff = all(P.min_order is None or P.min_order >= 0 for P in Y.coeffs.values())
            known = all(P.order_lo is None or P.order_lo <= -1 for P in R.coeffs.values())
            birk.record(R.is_zero() and ydiff and known)
    birk.finish(t0)
    return [t1, comm, birk]


def suite_sp_reduction(seed=0, count=20, m=1, floor=-5, t_cap=2, **_):
    rng = random.Random(seed)
    seeds = PropertyResult("seeds lie on the Sp locus (S and Lax forms)")
    keep = PropertyResult("sp_evolve keeps A(S*)^-1 A - S = 0")
    control = PropertyResult("D2 = +D1 control breaks it at degree 1 (>= 90%)")
    t0 = time.perf_counter()
    broken = 0
    for _ in range(count):
        S = sampling.sp_dressing(rng, m, floor)
        cert = sp_check(S, m)
        seeds.record(cert.ok and cert.lax_ok and all(cert.blocks.values()))
        labels = {(1, 1): 0, (rng.randint(1, m), 2): 0}
        St = sp_evolve(S, FlowTimes(labels, t_cap), m)
        keep.record(sp_residual_series(St).is_zero())
        bad = sp_residual_series(sp_evolve(S, FlowTimes(labels, 1), m, sign=+1))
        if not all(P.is_zero() for P in bad.degree_part(1).values()):
            broken += 1
    control.checked = count
    control.failed = count - broken
    control.passed = count > 0 and broken >= 0.9 * count
    control.note = f"{broken}/{count} seeds broken"
    return [seeds.finish(t0), keep.finish(t0), control.finish(t0)]


def suite_hitchin_algebra(seed=0, count=200, n=None, **_):
    rng = random.Random(seed)
    equi = PropertyResult("hitchin(lam Phi) = lam . hitchin(Phi)")
    dual = PropertyResult("hitchin(-Phi^T) = hitchin(Phi)*")
    oracle = PropertyResult("Faddeev-LeVerrier = Leibniz determinant")
    t0 = time.perf_counter()
    for _ in range(count):
        size = n or rng.randint(1, 4)
        phi = sampling.higgs(rng, size)
        s = hitchin_map(phi)
        lam = sampling.nonzero_rational(rng)
        equi.record(hitchin_map(phi.scale(lam)) == weighted_scale(lam, s))
        dual.record(hitchin_map(phi.transpose().scale(-1)) == serre_dual_point(s)
                    and serre_dual_point(serre_dual_point(s)) == s)
        oracle.record(charpoly_by_leibniz(phi) == [LaurentPoly.const(1)] + list(s.s))
    return [equi.finish(t0), dual.finish(t0), oracle.finish(t0)]


def suite_resultant(seed=0, count=100, prec=10, **_):
    rng = random.Random(seed)
    quad = PropertyResult("n=2: Res = 4 s2 - s1^2")
    vanish = PropertyResult("Res(w0) = 0 <=> repeated root")
    hensel = PropertyResult("Hensel branches rebuild the polynomial mod z^10")
    ram = PropertyResult("Hensel errors exactly on ramified inputs")
    t0 = time.perf_counter()
    for _ in range(count):
        s = HitchinPoint([sampling.laurent_poly(rng), sampling.laurent_poly(rng)])
        quad.record(ramification_resultant(s) == s[1] * 4 - s[0] * s[0])
    hits = 0
    for _ in range(count):
        size = rng.randint(2, 4)
        w0 = sampling.rational(rng)
        roots = [sampling.rational(rng) for _ in range(size)]
        if rng.random() < 0.5:
            roots[1] = roots[0]
        p = [Fraction(1)]
        for r in roots:
            p = [a - r * b for a, b in zip(p + [0], [0] + p)]
        s_vals = p[1:]
        # s_i(w) = s_i(w0) + (w - w0) * random
        s = HitchinPoint([
            LaurentPoly.const(v) + (LaurentPoly.w() - w0) * sampling.laurent_poly(rng, 0, 1)
            for v in s_vals
        ])
        at = [Fraction(1)] + [v(w0) for v in s.s]
        sp, x = _sympy_poly(at)
        repeated = int(sympy.degree(sympy.gcd(sp, sp.diff(x)), x)) > 0
        hits += repeated
        vanish.record((ramification_resultant(s)(w0) == 0) == repeated)
    vanish.note = f"{hits} repeated-root instances"
    for _ in range(count):
        size = rng.randint(1, 4)
        roots = [sampling.rational(rng) for _ in range(size)]
        if size >= 2 and rng.random() < 0.3:
            roots[1] = roots[0]
        ramified = len(set(roots)) < len(roots)
        # prod (x - r_i - z h_i(z)) plus a z^3 perturbation keeps the z=0 roots
        poly = [[Fraction(1)] + [Fraction(0)] * (prec - 1)]
        for r in roots:
            h = [r] + [sampling.rational(rng) for _ in range(2)]
            branch = [-c for c in h] + [Fraction(0)] * (prec - 3)
            new = [list(c) for c in poly] + [[Fraction(0)] * prec]
            for i, c in enumerate(poly):
                for a in range(prec):
                    if c[a]:
                        for b in range(prec - a):
                            new[i + 1][a + b] += c[a] * branch[b]
            poly = new
        if rng.random() < 0.5 and size >= 1:
            poly[-1][3] += sampling.rational(rng)
        s = HitchinPoint([LaurentPoly({k: c for k, c in enumerate(row)}) for row in poly[1:]])
        try:
            branches = hensel_split(s, prec)
        except RamifiedError:
            ram.record(ramified)
            continue
        except IrrationalBranchError:
            ram.record(False, "unexpected irrational branch")
            continue
        ram.record(not ramified)
        rebuilt = branch_product(branches, prec)
        hensel.record(all(all(q == c for q, c in zip(rr, row)) for rr, row in zip(rebuilt[1:], poly[1:])))
    return [quad.finish(t0), vanish.finish(t0), hensel.finish(t0), ram.finish(t0)]


def suite_numerology(**_):
    t0 = time.perf_counter()
    res = PropertyResult("printed formulas")
    a = numerology(2, 2, 2)
    res.record(a.delta == 8, ("delta(2,2)", a.delta))
    res.record(numerology(3, 2, 0).delta == 1944, "delta(3,2)")
    res.record(a.dim_VGL == 5 == a.genus_Cs, "N(2,2)")
    b = numerology(2, 2, 2, m=1)
    res.record(b.genus_Cs_prime == 2, "genus_Cs_prime")
    res.record(a.dim_VSL == 3, "dim_VSL")
    res.record(b.dim_VSp == 3, "dim_VSp")
    for n in range(1, 5):
        for g in range(2, 5):
            d0 = self_dual_degree(n, g)
            res.record(numerology(n, g, d0).serre_dual_degree == d0, ("self-dual", n, g))
            c = numerology(n, g, 7)
            res.record(numerology(n, g, c.serre_dual_degree).serre_dual_degree == 7, ("involution", n, g))
    return [res.finish(t0)]


SUITES: dict[str, Callable] = {
    "adjoint-formula": suite_adjoint_formula,
    "adjoint-algebra": suite_adjoint_algebra,
    "rho-oracle": suite_rho_oracle,
    "perp-involution": suite_perp_involution,
    "bigcell-duality": suite_bigcell_duality,
    "lax-normalization": suite_lax_normalization,
    "kp-flows": suite_kp_flows,
    "sp-reduction": suite_sp_reduction,
    "hitchin-algebra": suite_hitchin_algebra,
    "resultant": suite_resultant,
    "numerology": suite_numerology,
}


def run_suite(name: str, **params) -> list[PropertyResult]:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    params = {k: v for k, v in params.items() if v is not None}
    return fn(**params)
