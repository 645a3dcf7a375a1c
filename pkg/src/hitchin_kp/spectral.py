"""Characteristic data of Higgs matrices over Q[w, w^-1].

Covers the characteristic-coefficient map, its scaling and duality
symmetries, the ramification resultant, local eigenbranch splitting by
Hensel lifting, and the integer dimension/degree formulas of the moduli
problem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import sympy

from .errors import IrrationalBranchError, RamifiedError
from .series import as_rational, format_rational, parse_rational

__all__ = [
    "LaurentPoly",
    "HiggsMatrix",
    "HitchinPoint",
    "hitchin_map",
    "weighted_scale",
    "serre_dual_point",
    "sp_membership",
    "ramification_resultant",
    "QuadraticNumber",
    "hensel_split",
    "Numerology",
    "numerology",
    "self_dual_degree",
]


class LaurentPoly:
    """Finite Laurent polynomial ``sum c_k w^k`` over Q."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean = {}
        for k, c in (terms or {}).items():
            c = as_rational(c)
            if c:
                clean[int(k)] = c
        self.terms = clean

    @classmethod
    def const(cls, c) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def w(cls, power: int = 1, coeff=1) -> "LaurentPoly":
        return cls({power: coeff})

    @staticmethod
    def lift(value) -> "LaurentPoly":
        return value if isinstance(value, LaurentPoly) else LaurentPoly.const(value)

    def __add__(self, other):
        other = LaurentPoly.lift(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-LaurentPoly.lift(other))

    def __rsub__(self, other):
        return LaurentPoly.lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            c = as_rational(other)
            return LaurentPoly({k: v * c for k, v in self.terms.items()})
        out: dict[int, Fraction] = {}
        for a, x in self.terms.items():
            for b, y in other.terms.items():
                out[a + b] = out.get(a + b, 0) + x * y
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = LaurentPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __call__(self, w0) -> Fraction:
        w0 = as_rational(w0)
        return sum((c * w0 ** k for k, c in self.terms.items()), Fraction(0))

    def coeff(self, k: int) -> Fraction:
        return self.terms.get(k, Fraction(0))

    def min_degree(self) -> int:
        return min(self.terms) if self.terms else 0

    def max_degree(self) -> int:
        return max(self.terms) if self.terms else 0

    def __repr__(self):
        return f"LaurentPoly({self!s})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms):
            c = self.terms[k]
            cs = str(c)
            if k == 0:
                parts.append(cs)
            else:
                mono = "w" if k == 1 else f"w^{k}"
                parts.append(mono if c == 1 else ("-" + mono if c == -1 else f"{cs}*{mono}"))
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {str(k): format_rational(c) for k, c in sorted(self.terms.items())}

    @classmethod
    def from_json(cls, data) -> "LaurentPoly":
        if isinstance(data, (int, str)):
            return cls.const(parse_rational(data) if isinstance(data, str) else data)
        if not isinstance(data, Mapping):
            raise ValueError("Laurent polynomial JSON must be an object {degree: 'p/q'}")
        return cls({int(k): parse_rational(v) if isinstance(v, str) else v for k, v in data.items()})


class HiggsMatrix:
    """Square matrix of Laurent polynomials."""

    __slots__ = ("n", "entries")

    def __init__(self, entries: Sequence[Sequence]):
        rows = [[LaurentPoly.lift(e) for e in row] for row in entries]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("Higgs matrix must be square")
        self.n = n
        self.entries = rows

    def __mul__(self, other: "HiggsMatrix") -> "HiggsMatrix":
        n = self.n
        return HiggsMatrix([[sum((self.entries[i][k] * other.entries[k][j] for k in range(n)), LaurentPoly())
                             for j in range(n)] for i in range(n)])

    def scale(self, lam) -> "HiggsMatrix":
        return HiggsMatrix([[e * lam for e in row] for row in self.entries])

    def transpose(self) -> "HiggsMatrix":
        return HiggsMatrix([[self.entries[j][i] for j in range(self.n)] for i in range(self.n)])

    def trace(self) -> LaurentPoly:
        return sum((self.entries[i][i] for i in range(self.n)), LaurentPoly())

    def __repr__(self):
        return f"HiggsMatrix({[[str(e) for e in row] for row in self.entries]})"

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [[e.to_json() for e in row] for row in self.entries]}

    @classmethod
    def from_json(cls, data: Mapping) -> "HiggsMatrix":
        try:
            out = cls([[LaurentPoly.from_json(e) for e in row] for row in data["entries"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Higgs matrix JSON: {exc}") from exc
        if "n" in data and int(data["n"]) != out.n:
            raise ValueError("declared n does not match the entries")
        return out


class HitchinPoint:
    """Characteristic coefficients ``(s_1, ..., s_n)``: ``det(x - Phi) = x^n + s_1 x^(n-1) + ... + s_n``."""

    __slots__ = ("s",)

    def __init__(self, s: Sequence):
        self.s = tuple(LaurentPoly.lift(v) for v in s)

    @property
    def n(self) -> int:
        return len(self.s)

    def __eq__(self, other):
        if not isinstance(other, HitchinPoint):
            return NotImplemented
        return self.s == other.s

    def __hash__(self):
        return hash(self.s)

    def __getitem__(self, i):
        return self.s[i]

    def __repr__(self):
        return "HitchinPoint(" + ", ".join(str(v) for v in self.s) + ")"

    def to_json(self) -> dict:
        return {"s": [v.to_json() for v in self.s]}

    @classmethod
    def from_json(cls, data) -> "HitchinPoint":
        try:
            values = data["s"] if isinstance(data, Mapping) else data
            return cls([LaurentPoly.from_json(v) for v in values])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Hitchin point JSON: {exc}") from exc


def hitchin_map(phi: HiggsMatrix) -> HitchinPoint:
    """Characteristic coefficients by the Faddeev-LeVerrier recursion."""
    n = phi.n
    Mk = HiggsMatrix([[LaurentPoly() for _ in range(n)] for _ in range(n)])
    c_prev = LaurentPoly.const(1)
    s = []
    for k in range(1, n + 1):
        Mk = HiggsMatrix([[Mk.entries[i][j] + (c_prev if i == j else LaurentPoly()) for j in range(n)]
                          for i in range(n)])
        AM = phi * Mk
        c_prev = AM.trace() * Fraction(-1, k)
        s.append(c_prev)
        Mk = AM
    return HitchinPoint(s)


def weighted_scale(lam, s: HitchinPoint) -> HitchinPoint:
    """``(lam s_1, lam^2 s_2, ..., lam^n s_n)``."""
    lam = as_rational(lam)
    return HitchinPoint([v * lam ** (i + 1) for i, v in enumerate(s.s)])


def serre_dual_point(s: HitchinPoint) -> HitchinPoint:
    """``s* = (-s_1, s_2, ..., (-1)^n s_n)``."""
    return HitchinPoint([v if (i + 1) % 2 == 0 else -v for i, v in enumerate(s.s)])


def sp_membership(s: HitchinPoint) -> bool:
    """Whether ``s = s*`` (all odd-index coefficients vanish); needs even ``n``."""
    if s.n % 2:
        raise ValueError(f"odd n = {s.n}: the symplectic locus needs n = 2m")
    return s == serre_dual_point(s)


def _determinant(mat: Sequence[Sequence[LaurentPoly]]) -> LaurentPoly:
    """Laplace expansion along rows, memoized on the set of remaining columns."""
    size = len(mat)

    @lru_cache(maxsize=None)
    def minor(row: int, cols: frozenset) -> LaurentPoly:
        if row == size:
            return LaurentPoly.const(1)
        total = LaurentPoly()
        for pos, c in enumerate(sorted(cols)):
            e = mat[row][c]
            if e.is_zero():
                continue
            term = e * minor(row + 1, cols - {c})
            total = total + term if pos % 2 == 0 else total - term
        return total

    return minor(0, frozenset(range(size)))


def sylvester_matrix(p: Sequence[LaurentPoly], q: Sequence[LaurentPoly]) -> list[list[LaurentPoly]]:
    """Sylvester matrix of two polynomials given leading-coefficient-first."""
    dp, dq = len(p) - 1, len(q) - 1
    size = dp + dq
    zero = LaurentPoly()
    rows = []
    for r in range(dq):
        rows.append([zero] * r + list(p) + [zero] * (size - r - dp - 1))
    for r in range(dp):
        rows.append([zero] * r + list(q) + [zero] * (size - r - dq - 1))
    return rows


def ramification_resultant(s: HitchinPoint) -> LaurentPoly:
    """Resultant of ``x^n + s_1 x^(n-1) + ... + s_n`` and its x-derivative.

    Rows are ordered leading coefficient first; for ``n = 2`` this gives
    ``4 s_2 - s_1^2``.
    """
    n = s.n
    if n == 0:
        return LaurentPoly.const(1)
    p = [LaurentPoly.const(1)] + list(s.s)
    dp = [p[i] * (n - i) for i in range(n)]
    if n == 1:
        return LaurentPoly.const(1)
    return _determinant(sylvester_matrix(p, dp))


# -- local eigenbranches -----------------------------------------------------------


class QuadraticNumber:
    """``a + b sqrt(D)`` with rational ``a, b`` and a fixed squarefree integer ``D``."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b=0, D: int = 1):
        self.a = as_rational(a)
        self.b = as_rational(b)
        self.D = int(D)

    def _lift(self, other):
        if isinstance(other, QuadraticNumber):
            if other.D != self.D and other.b and self.b:
                raise ValueError("mixing different quadratic fields")
            return other
        return QuadraticNumber(other, 0, self.D)

    def __add__(self, other):
        o = self._lift(other)
        return QuadraticNumber(self.a + o.a, self.b + o.b, self.D if self.b else o.D)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.D)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        D = self.D if self.b else o.D
        return QuadraticNumber(self.a * o.a + self.b * o.b * D, self.a * o.b + self.b * o.a, D)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        norm = o.a * o.a - o.b * o.b * o.D
        if norm == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        conj = QuadraticNumber(o.a / norm, -o.b / norm, o.D)
        return self * conj

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if not isinstance(other, QuadraticNumber):
            return NotImplemented
        return self.a == other.a and self.b == other.b and (self.b == 0 or self.D == other.D)

    def __hash__(self):
        return hash((self.a, self.b, self.D if self.b else 1))

    def __bool__(self):
        return bool(self.a or self.b)

    def is_rational(self) -> bool:
        return self.b == 0

    def __repr__(self):
        if not self.b:
            return str(self.a)
        root = f"{self.b}*sqrt({self.D})"
        return root if not self.a else f"{self.a} + {root}"

    def to_json(self):
        if not self.b:
            return format_rational(self.a)
        return {"a": format_rational(self.a), "b": format_rational(self.b), "sqrt": self.D}


def _constant_roots(coeffs: Sequence[Fraction], allow_sqrt: bool) -> list:
    """Distinct roots at ``z = 0`` of the monic polynomial with the given coefficients."""
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in coeffs], x, domain="QQ")
    if sympy.degree(sympy.gcd(poly, poly.diff(x)), x) > 0:
        raise RamifiedError("ramified at p: repeated eigenvalue at z = 0")
    roots = []
    field = None
    for factor, _mult in poly.factor_list()[1]:
        deg = factor.degree()
        fc = [Fraction(int(c.p), int(c.q)) for c in factor.all_coeffs()]
        if deg == 1:
            roots.append(QuadraticNumber(-fc[1] / fc[0]))
        elif deg == 2 and allow_sqrt:
            a, b, c = fc
            disc = b * b - 4 * a * c
            # disc = r^2 * D with D squarefree
            num, den = disc.numerator * disc.denominator, disc.denominator
            D, r_int = _squarefree_part(num)
            if field is not None and field != D:
                raise IrrationalBranchError("irrational branch: roots need more than one square root")
            field = D
            r = Fraction(r_int, den)
            for sign in (1, -1):
                roots.append(QuadraticNumber(-b / (2 * a), sign * r / (2 * a), D))
        else:
            raise IrrationalBranchError(
                f"irrational branch: eigenvalue factor of degree {deg} at z = 0"
            )
    return roots


def _squarefree_part(k: int) -> tuple[int, int]:
    """``k = r^2 * D`` with ``D`` squarefree; returns ``(D, r)``."""
    sign = -1 if k < 0 else 1
    r = 1
    D = 1
    for prime, e in sympy.factorint(abs(k)).items():
        r *= prime ** (e // 2)
        if e % 2:
            D *= prime
    return sign * D, r


def _series_mul(a: list, b: list, prec: int) -> list:
    out = [QuadraticNumber(0)] * prec
    for i, x in enumerate(a[:prec]):
        if not x:
            continue
        for j in range(prec - i):
            y = b[j]
            if y:
                out[i + j] = out[i + j] + x * y
    return out


def _char_series(s: HitchinPoint, prec: int) -> list[list[Fraction]]:
    """Coefficients of each ``s_i`` as power series in ``z`` (``w`` read as the local parameter)."""
    out = []
    for v in s.s:
        if v.terms and v.min_degree() < 0:
            raise ValueError("coefficients must be regular at p (no negative powers)")
        out.append([v.coeff(k) for k in range(prec)])
    return out


def hensel_split(s: HitchinPoint, prec: int, allow_sqrt: bool = False) -> list[list[QuadraticNumber]]:
    """Eigenbranches ``a_i(z)`` mod ``z^prec`` with ``prod (x - a_i) = x^n + s_1 x^(n-1) + ...``.

    Roots at ``z = 0`` must be distinct (else ``RamifiedError``) and rational,
    or lie in one quadratic field when ``allow_sqrt`` is set (else
    ``IrrationalBranchError``).  Each root is lifted coefficient by
    coefficient: the correction at ``z^k`` is ``-f(a)_k / f'(a_0)``.
    """
    n = s.n
    if prec < 1:
        raise ValueError("precision must be >= 1")
    sc = _char_series(s, prec)
    const = [Fraction(1)] + [c[0] for c in sc]
    roots = _constant_roots(const, allow_sqrt)
    one = [QuadraticNumber(1)] + [QuadraticNumber(0)] * (prec - 1)
    coeff_series = [one] + [[QuadraticNumber(c) for c in row] for row in sc]
    branches = []
    for r in roots:
        # f'(a0) at z = 0
        deriv = QuadraticNumber(0)
        for i in range(n):
            deriv = deriv + _qpow(r, n - i - 1) * (n - i) * const[i]
        a = [r] + [QuadraticNumber(0)] * (prec - 1)
        for k in range(1, prec):
            # Horner evaluation of f(a) mod z^(k+1)
            val = [QuadraticNumber(0)] * (k + 1)
            for c in coeff_series:
                val = _series_mul(val, a, k + 1)
                val = [v + w for v, w in zip(val, c[: k + 1])]
            a[k] = -val[k] / deriv
        branches.append(a)
    return branches


def _qpow(q: QuadraticNumber, k: int) -> QuadraticNumber:
    out = QuadraticNumber(1)
    for _ in range(k):
        out = out * q
    return out


def branch_product(branches: Sequence[Sequence[QuadraticNumber]], prec: int) -> list[list[QuadraticNumber]]:
    """Coefficients (leading first) of ``prod (x - a_i(z))`` mod ``z^prec``, each a z-series."""
    poly = [[QuadraticNumber(1)] + [QuadraticNumber(0)] * (prec - 1)]
    for a in branches:
        neg = [-c for c in a]
        new = [list(c) for c in poly] + [[QuadraticNumber(0)] * prec]
        for i, c in enumerate(poly):
            prod = _series_mul(c, neg, prec)
            new[i + 1] = [u + v for u, v in zip(new[i + 1], prod)]
        poly = new
    return poly


# -- numerology --------------------------------------------------------------------


@dataclass(frozen=True)
class Numerology:
    n: int
    g: int
    d: int
    dim_VGL: int
    genus_Cs: int
    delta: int
    deg_LE: int
    serre_dual_degree: int
    serre_dual_LE_degree: int
    dim_VSL: int
    m: int | None = None
    genus_Cs_prime: int | None = None
    dim_VSp: int | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def numerology(n: int, g: int, d: int = 0, m: int | None = None) -> Numerology:
    """Dimension and degree counts for rank ``n``, genus ``g``, degree ``d``."""
    if g < 2:
        raise ValueError(f"genus must be >= 2, got {g}")
    if n < 1:
        raise ValueError("rank must be >= 1")
    if m is not None and n != 2 * m:
        raise ValueError(f"n = {n} must equal 2m = {2 * m}")
    h = g - 1
    delta = math.prod(i ** ((2 * i - 1) * h) for i in range(1, n + 1))
    extra = {}
    if m is not None:
        extra = {"m": m, "genus_Cs_prime": m * (2 * m - 1) * h + 1, "dim_VSp": m * (2 * m + 1) * h}
    return Numerology(
        n=n, g=g, d=d,
        dim_VGL=n * n * h + 1,
        genus_Cs=n * n * h + 1,
        delta=delta,
        deg_LE=d + n * (n - 1) * h,
        serre_dual_degree=-d + 2 * n * h,
        serre_dual_LE_degree=-d + (n * n + n) * h,
        dim_VSL=(n * n - 1) * h,
        **extra,
    )


def self_dual_degree(n: int, g: int) -> int:
    """Fixed point of ``d -> -d + 2n(g-1)``."""
    return n * (g - 1)
