"""Multicomponent KP dynamics on dressing operators.

Flows are labelled by pairs ``(i, j)`` (component ``i`` counted from 1,
power ``j >= 1``) and generated by ``E_ii D^j``.  Time dependence is handled
as a truncated multivariate power series in the flow times: ``S(t)`` is a
``TDeformation`` whose coefficients are operators.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import SpLocusError, TruncationError
from .pdo import (
    MatrixPDO,
    _check_monic,
    conjugate_by_involution,
    pdo_adjoint,
    pdo_invert_monic,
    pdo_split,
)
from .series import as_rational, format_rational, parse_rational

__all__ = [
    "DressingOperator",
    "FlowTimes",
    "TDeformation",
    "dress",
    "kp_vector_field",
    "vector_field_derivative",
    "evolve",
    "evolve_generators",
    "birkhoff_residual",
    "sp_seed",
    "sp_check",
    "SpCertificate",
    "sp_evolve",
    "sp_residual_series",
]

Label = tuple  # (component from 1, power)


class DressingOperator:
    """A monic order-0 operator ``S = I + O(D^-1)`` with a truncation floor."""

    __slots__ = ("S",)

    def __init__(self, S: MatrixPDO, floor: int | None = None):
        _check_monic(S)
        if floor is not None:
            S = S.truncate(floor)
        if S.order_lo is None:
            raise TruncationError("a dressing operator needs a truncation floor (pass floor=...)")
        if S.order_lo > -1:
            raise TruncationError(f"floor {S.order_lo} leaves no D^-1 data")
        self.S = S

    @property
    def n(self) -> int:
        return self.S.n

    @property
    def floor(self) -> int:
        return self.S.order_lo

    def inverse(self) -> MatrixPDO:
        return pdo_invert_monic(self.S)

    def __eq__(self, other):
        if not isinstance(other, DressingOperator):
            return NotImplemented
        return self.S == other.S

    def __hash__(self):
        return hash(self.S)

    def __repr__(self):
        return f"DressingOperator({self.S})"


def _as_dressing(S) -> DressingOperator:
    return S if isinstance(S, DressingOperator) else DressingOperator(S)


def dress(S) -> MatrixPDO:
    """Lax operator ``L = S (I D) S^-1``; its ``D^0`` coefficient must vanish."""
    S = _as_dressing(S)
    L = S.S @ MatrixPDO.diagonal_d(S.n, 1, [1] * S.n) @ S.inverse()
    if L.order_lo is not None and L.order_lo > 0:
        raise TruncationError("floor too shallow to certify the D^0 cancellation")
    if 0 in L.terms:
        raise AssertionError(f"D^0 coefficient of the Lax operator does not vanish: {L.coeff(0)}")
    return L


def _generator(n: int, i: int, j: int) -> MatrixPDO:
    if not 1 <= i <= n:
        raise ValueError(f"component {i} outside 1..{n}")
    if j < 1:
        raise ValueError("flow power must be >= 1")
    return MatrixPDO.elementary(n, i - 1, i - 1, j)


def _vf(S: MatrixPDO, Sinv: MatrixPDO, G: MatrixPDO) -> MatrixPDO:
    X = S @ G @ Sinv
    return -(pdo_split(X)[1] @ S)


def kp_vector_field(S, i: int, j: int) -> MatrixPDO:
    """``dS/dt_ij = -(S E_ii D^j S^-1)_- S``; exact down to ``floor + j``."""
    S = _as_dressing(S)
    G = _generator(S.n, i, j)
    out = _vf(S.S, S.inverse(), G)
    if out.order_lo is not None and out.order_lo > -1:
        raise TruncationError(f"floor {S.floor} too shallow for the flow power {j}")
    return out


def vector_field_derivative(S, i: int, j: int, delta: MatrixPDO) -> MatrixPDO:
    """Directional derivative of ``S -> kp_vector_field(S, i, j)`` along ``delta``.

    With ``X = S G S^-1`` the derivative is ``-([delta S^-1, X])_- S - X_- delta``.
    """
    S = _as_dressing(S)
    G = _generator(S.n, i, j)
    Sinv = S.inverse()
    X = S.S @ G @ Sinv
    B = delta @ Sinv
    comm = B @ X - X @ B
    return -(pdo_split(comm)[1] @ S.S) - (pdo_split(X)[1] @ delta)


# -- flow times and t-series ---------------------------------------------------


def _parse_label(key) -> Label:
    if isinstance(key, str):
        parts = [p for p in re.split(r"[,\s()]+", key) if p]
        if len(parts) != 2:
            raise ValueError(f"bad flow label {key!r}; expected 'i,j'")
        key = parts
    i, j = (int(v) for v in key)
    return (i, j)


class FlowTimes:
    """Flow labels with time values, plus the total-degree cap for t-expansions."""

    __slots__ = ("times", "t_cap")

    def __init__(self, times: Mapping, t_cap: int = 1):
        self.times = {_parse_label(k): as_rational(v) for k, v in times.items()}
        if t_cap < 0:
            raise ValueError("t_cap must be >= 0")
        self.t_cap = int(t_cap)

    @property
    def labels(self) -> list[Label]:
        return sorted(self.times)

    def to_json(self) -> dict:
        return {"t_cap": self.t_cap,
                "times": {f"{i},{j}": format_rational(v) for (i, j), v in sorted(self.times.items())}}

    @classmethod
    def from_json(cls, data: Mapping) -> "FlowTimes":
        try:
            return cls(data.get("times", {}) and {k: parse_rational(v) if isinstance(v, str) else v
                                                   for k, v in data["times"].items()},
                       int(data.get("t_cap", 1)))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed flow times JSON: {exc}") from exc

    def __repr__(self):
        return f"FlowTimes({self.times}, t_cap={self.t_cap})"


def _monomials(nvars: int, cap: int) -> list[tuple]:
    """Exponent tuples of total degree <= cap, ordered by degree then lexicographically."""
    out = []
    for deg in range(cap + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return sorted(set(out), key=lambda e: (sum(e), [-x for x in e]))


def _sub_exponents(alpha: tuple):
    return itertools.product(*(range(a + 1) for a in alpha))


class TDeformation:
    """Truncated power series ``sum_alpha P_alpha t^alpha`` with operator coefficients."""

    __slots__ = ("labels", "coeffs", "t_cap", "n")

    def __init__(self, labels: Sequence, coeffs: Mapping[tuple, MatrixPDO], t_cap: int, n: int | None = None):
        self.labels = [tuple(l) if isinstance(l, list) else l for l in labels]
        self.t_cap = int(t_cap)
        clean = {}
        for e, P in coeffs.items():
            e = tuple(e)
            if len(e) != len(self.labels):
                raise ValueError("exponent length does not match the labels")
            if sum(e) > self.t_cap:
                raise ValueError(f"monomial {e} exceeds t_cap {self.t_cap}")
            clean[e] = P
        self.coeffs = clean
        if n is None:
            n = next(iter(clean.values())).n if clean else 1
        self.n = n

    @property
    def base(self) -> MatrixPDO:
        return self[tuple([0] * len(self.labels))]

    def __getitem__(self, e) -> MatrixPDO:
        e = tuple(e)
        P = self.coeffs.get(e)
        if P is None:
            return MatrixPDO.zero(self.n)
        return P

    def degree_part(self, deg: int) -> dict:
        return {e: P for e, P in self.coeffs.items() if sum(e) == deg}

    def _check(self, other: "TDeformation"):
        if self.labels != other.labels:
            raise ValueError("t-series over different labels")

    def __add__(self, other):
        self._check(other)
        cap = min(self.t_cap, other.t_cap)
        keys = {e for e in set(self.coeffs) | set(other.coeffs) if sum(e) <= cap}
        return TDeformation(self.labels, {e: self[e] + other[e] for e in keys}, cap, self.n)

    def __sub__(self, other):
        self._check(other)
        cap = min(self.t_cap, other.t_cap)
        keys = {e for e in set(self.coeffs) | set(other.coeffs) if sum(e) <= cap}
        return TDeformation(self.labels, {e: self[e] - other[e] for e in keys}, cap, self.n)

    def __matmul__(self, other):
        self._check(other)
        cap = min(self.t_cap, other.t_cap)
        out = {}
        for a, P in self.coeffs.items():
            for b, Q in other.coeffs.items():
                e = tuple(x + y for x, y in zip(a, b))
                if sum(e) > cap:
                    continue
                term = P @ Q
                out[e] = out[e] + term if e in out else term
        return TDeformation(self.labels, out, cap, self.n)

    def map(self, fn) -> "TDeformation":
        return TDeformation(self.labels, {e: fn(P) for e, P in self.coeffs.items()}, self.t_cap, self.n)

    def adjoint(self) -> "TDeformation":
        return self.map(pdo_adjoint)

    def inverse(self) -> "TDeformation":
        """Inverse as a t-series; the constant coefficient must be monic."""
        zero = tuple([0] * len(self.labels))
        base_inv = pdo_invert_monic(self.base)
        inv = {zero: base_inv}
        for alpha in _monomials(len(self.labels), self.t_cap):
            if alpha == zero:
                continue
            acc = None
            for beta in _sub_exponents(alpha):
                if beta == zero or beta not in self.coeffs:
                    continue
                rest = tuple(a - b for a, b in zip(alpha, beta))
                if rest not in inv:
                    continue
                term = self.coeffs[beta] @ inv[rest]
                acc = term if acc is None else acc + term
            if acc is not None:
                inv[alpha] = -(base_inv @ acc)
        return TDeformation(self.labels, inv, self.t_cap, self.n)

    def evaluate(self, values: Mapping | Sequence) -> MatrixPDO:
        """Sum the series at concrete times (``values`` keyed by label or in label order)."""
        if isinstance(values, Mapping):
            vals = [as_rational(values.get(l, 0)) for l in self.labels]
        else:
            vals = [as_rational(v) for v in values]
        total = MatrixPDO.zero(self.n)
        for e, P in self.coeffs.items():
            w = Fraction(1)
            for v, k in zip(vals, e):
                w *= v ** k
            if w:
                total = total + P.scale(w)
        return total

    def is_zero(self) -> bool:
        return all(P.is_zero() for P in self.coeffs.values())

    def equals_to_floor(self, other: "TDeformation") -> bool:
        self._check(other)
        keys = {e for e in set(self.coeffs) | set(other.coeffs)
                if sum(e) <= min(self.t_cap, other.t_cap)}
        return all(self[e].equals_to_floor(other[e]) for e in keys)

    def _monomial_str(self, e: tuple) -> str:
        parts = []
        for (lab, k) in zip(self.labels, e):
            if k == 0:
                continue
            name = f"t({lab[0]},{lab[1]})" if isinstance(lab, tuple) else f"t({lab})"
            parts.append(name if k == 1 else f"{name}^{k}")
        return "*".join(parts) or "1"

    def to_json(self) -> dict:
        return {
            "t_cap": self.t_cap,
            "labels": [f"{l[0]},{l[1]}" if isinstance(l, tuple) else l for l in self.labels],
            "terms": {self._monomial_str(e): P.to_json()
                      for e, P in sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "TDeformation":
        try:
            labels = [_parse_label(l) for l in data["labels"]]
            coeffs = {}
            for mono, pj in data["terms"].items():
                e = [0] * len(labels)
                if mono != "1":
                    for factor in mono.split("*"):
                        m = re.fullmatch(r"t\((\d+),(\d+)\)(?:\^(\d+))?", factor)
                        if not m:
                            raise ValueError(f"bad monomial {mono!r}")
                        e[labels.index((int(m.group(1)), int(m.group(2))))] += int(m.group(3) or 1)
                coeffs[tuple(e)] = MatrixPDO.from_json(pj)
            n = next(iter(coeffs.values())).n if coeffs else 1
            return cls(labels, coeffs, int(data["t_cap"]), n)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed t-series JSON: {exc}") from exc

    def __repr__(self):
        return f"TDeformation(labels={self.labels}, t_cap={self.t_cap}, terms={len(self.coeffs)})"


def evolve_generators(S0, generators: Sequence[MatrixPDO], t_cap: int, labels=None):
    """Solve ``exp(sum t_a G_a) S0^-1 = S(t)^-1 Y(t)`` degree by degree.

    The generators must be commuting constant diagonal differential
    operators.  At each monomial ``alpha``, ``R = sum_{beta<alpha} S_beta U_(alpha-beta)``
    splits as ``S_alpha S0^-1 = -R_-`` and ``Y_alpha = R_+``.
    """
    S0 = _as_dressing(S0)
    n = S0.n
    k = len(generators)
    if labels is None:
        labels = list(range(k))
    base_inv = S0.inverse()
    zero = tuple([0] * k)
    monos = _monomials(k, t_cap)
    # U_alpha = G^alpha / alpha! . S0^-1
    U = {}
    for alpha in monos:
        G = MatrixPDO.identity(n)
        fact = 1
        for g, a in zip(generators, alpha):
            for _ in range(a):
                G = G @ g
            fact *= math.factorial(a)
        U[alpha] = (G @ base_inv).scale(Fraction(1, fact))
    S = {zero: S0.S}
    Y = {zero: MatrixPDO.identity(n)}
    for alpha in monos:
        if alpha == zero:
            continue
        R = None
        for beta in _sub_exponents(alpha):
            if beta == alpha or beta not in S:
                continue
            rest = tuple(a - b for a, b in zip(alpha, beta))
            term = S[beta] @ U[rest]
            R = term if R is None else R + term
        if R.order_lo is not None and R.order_lo > -1:
            raise TruncationError(
                f"truncation floor {S0.floor} insufficient for t-degree {sum(alpha)}"
            )
        plus, minus = pdo_split(R)
        S[alpha] = -(minus @ S0.S)
        Y[alpha] = plus
    return TDeformation(labels, S, t_cap, n), TDeformation(labels, Y, t_cap, n)


def evolve(S0, t: FlowTimes) -> tuple[TDeformation, TDeformation]:
    """``(S(t), Y(t))`` for the flows ``E_ii D^j`` labelled in ``t``.

    With no labels the result is the constant series ``(S0, I)``.
    """
    S0 = _as_dressing(S0)
    labels = t.labels
    gens = [_generator(S0.n, i, j) for i, j in labels]
    return evolve_generators(S0, gens, t.t_cap, labels)


def birkhoff_residual(S0, generators: Sequence[MatrixPDO], S: TDeformation, Y: TDeformation) -> TDeformation:
    """``exp(D) S0^-1 - S(t)^-1 Y(t)`` computed independently as t-series."""
    S0 = _as_dressing(S0)
    base_inv = S0.inverse()
    U = {}
    for alpha in _monomials(len(generators), S.t_cap):
        G = MatrixPDO.identity(S0.n)
        fact = 1
        for g, a in zip(generators, alpha):
            for _ in range(a):
                G = G @ g
            fact *= math.factorial(a)
        U[alpha] = (G @ base_inv).scale(Fraction(1, fact))
    lhs = TDeformation(S.labels, U, S.t_cap, S0.n)
    return lhs - (S.inverse() @ Y)


# -- the Sp_2m reduction ---------------------------------------------------------


def sharp(P: MatrixPDO) -> MatrixPDO:
    """``P^# = A P* A``; an anti-involution of the operator ring."""
    return conjugate_by_involution(pdo_adjoint(P))


def _tau(mat) -> list:
    """Leading part of ``#`` on a coefficient: ``A c(-x)^T A``."""
    n = len(mat)
    m = n // 2
    sigma = [(i + m) % n for i in range(n)]
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            e = mat[sigma[j]][sigma[i]]
            row.append(tuple(c if k % 2 == 0 else -c for k, c in enumerate(e)))
        out.append(row)
    return out


def sp_seed(m: int, seed_terms: Mapping[int, Sequence], floor: int) -> MatrixPDO:
    """A monic ``S`` with ``S = A (S*)^-1 A``, built order by order from free data.

    ``seed_terms[k]`` is an arbitrary ``2m x 2m`` polynomial matrix used at
    ``D^-k``: its twisted-antisymmetric part is kept and the symmetric part is
    fixed by the condition ``S S^# = I``.
    """
    n = 2 * m
    S = MatrixPDO.identity(n).truncate(floor)
    for k in range(1, -floor + 1):
        empty = tuple(tuple(() for _ in range(n)) for _ in range(n))
        T = MatrixPDO(n, {-k: seed_terms.get(k, [[0] * n for _ in range(n)])})
        t = T.terms.get(-k, empty)
        cmat = (S @ sharp(S)).terms.get(-k, empty)
        tc = _tau(cmat)
        if [list(row) for row in tc] != [list(row) for row in cmat]:
            raise AssertionError("defect coefficient is not twisted-symmetric")
        tt = _tau(t)
        coeff = []
        for i in range(n):
            row = []
            for j in range(n):
                a, b, c = t[i][j], tt[i][j], cmat[i][j]
                L = max(len(a), len(b), len(c))
                pad = lambda v: list(v) + [0] * (L - len(v))
                row.append([(x - y - z) / 2 for x, y, z in zip(pad(a), pad(b), pad(c))])
            coeff.append(row)
        S = S + MatrixPDO(n, {-k: coeff}, floor)
    return S


class SpCertificate:
    """Outcome of ``sp_check`` with the residual and the Lax-form checks."""

    __slots__ = ("ok", "residual", "lax_ok", "blocks")

    def __init__(self, ok, residual, lax_ok, blocks):
        self.ok = ok
        self.residual = residual
        self.lax_ok = lax_ok
        self.blocks = blocks

    def __bool__(self):
        return self.ok

    def __repr__(self):
        return f"SpCertificate(ok={self.ok}, lax_ok={self.lax_ok}, blocks={self.blocks})"

    def to_json(self) -> dict:
        return {"ok": self.ok, "lax_ok": self.lax_ok, "blocks": self.blocks,
                "residual": self.residual.to_json()}


def _block(P: MatrixPDO, bi: int, bj: int, m: int) -> MatrixPDO:
    return MatrixPDO._raw(
        m,
        {l: tuple(tuple(mat[bi * m + r][bj * m + s] for s in range(m)) for r in range(m))
         for l, mat in P.terms.items()},
        P.order_lo,
    )


def sp_check(S, m: int) -> SpCertificate:
    """Whether ``S = A (S*)^-1 A`` to the floor, with ``L* = A L A`` and its block form."""
    S = _as_dressing(S)
    if S.n != 2 * m:
        raise ValueError(f"odd or mismatched size: n = {S.n}, m = {m}")
    Sstar_inv = pdo_invert_monic(pdo_adjoint(S.S))
    residual = conjugate_by_involution(Sstar_inv) - S.S
    ok = residual.is_zero()
    L = dress(S)
    Ls = pdo_adjoint(L)
    lax_ok = Ls.equals_to_floor(conjugate_by_involution(L))
    L1, L2, L3, L4 = (_block(L, 0, 0, m), _block(L, 0, 1, m), _block(L, 1, 0, m), _block(L, 1, 1, m))
    blocks = {
        "L1*=L4": pdo_adjoint(L1).equals_to_floor(L4),
        "L2*=L2": pdo_adjoint(L2).equals_to_floor(L2),
        "L3*=L3": pdo_adjoint(L3).equals_to_floor(L3),
    }
    return SpCertificate(ok, residual, lax_ok, blocks)


def sp_generators(m: int, labels: Iterable[Label], sign: int = -1) -> list[MatrixPDO]:
    """``E_ii D^j + sign * E_(i+m)(i+m) D^j`` for each label ``(i, j)`` with ``i <= m``."""
    gens = []
    for i, j in labels:
        if not 1 <= i <= m:
            raise ValueError(f"Sp flow labels use components 1..{m}, got {i}")
        gens.append(_generator(2 * m, i, j) + _generator(2 * m, i + m, j).scale(sign))
    return gens


def sp_evolve(S0, d: FlowTimes, m: int | None = None, sign: int = -1) -> TDeformation:
    """Evolve with ``D_2 = -D_1``; ``sign=+1`` gives the (non-preserving) ``D_2 = +D_1`` control."""
    S0 = _as_dressing(S0)
    if m is None:
        m = S0.n // 2
    if sign == -1 and not sp_check(S0, m).ok:
        raise SpLocusError("not on the Sp locus")
    gens = sp_generators(m, d.labels, sign)
    S, _ = evolve_generators(S0, gens, d.t_cap, d.labels)
    return S


def sp_residual_series(S: TDeformation) -> TDeformation:
    """``A (S(t)*)^-1 A - S(t)`` as a t-series."""
    return S.adjoint().inverse().map(conjugate_by_involution) - S
