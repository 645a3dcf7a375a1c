"""Matrix pseudo-differential operators with polynomial coefficients.

An operator is ``P = sum_l a_l(x) D^l`` with ``D = d/dx`` and ``a_l`` an
``n x n`` matrix of polynomials in ``x``, stored left-normalized (coefficients
to the left of ``D``).  Coefficients are kept as exact polynomials; the only
truncation is in the ``D^-1`` tail.  ``order_lo`` is the truncation floor:
terms of order ``< order_lo`` are unknown and never stored.  ``order_lo=None``
means the stored terms are the whole operator.

The ring acts on Q((z))^n through ``z^a <-> D^(-a-1)`` followed by reduction
modulo the left ideal generated by ``x``; under this action ``D`` is
multiplication by ``1/z`` and ``x`` is ``d/dz``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .errors import BigCellError, TruncationError, WindowError
from .series import (
    ZERO,
    TruncatedLaurentSeries,
    VectorLaurent,
    XPoly,
    as_rational,
    falling,
    format_rational,
    parse_rational,
    poly_add,
    poly_deriv,
    poly_mul,
    poly_reflect,
    poly_scale,
    residue,
    series_mul,
)

__all__ = [
    "binomial",
    "MatrixPDO",
    "pdo_compose",
    "pdo_adjoint",
    "pdo_rho",
    "pdo_act",
    "pairing",
    "pdo_split",
    "pdo_invert_monic",
    "involution_matrix",
    "conjugate_by_involution",
]

_BINOM: dict[tuple[int, int], int] = {}
_FACT = [1]


def _factorial(k: int) -> int:
    while len(_FACT) <= k:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[k]


def binomial(n: int, i: int) -> int:
    """Generalized binomial ``n (n-1) ... (n-i+1) / i!``; valid for negative ``n``."""
    if i < 0:
        return 0
    key = (n, i)
    v = _BINOM.get(key)
    if v is None:
        v = falling(n, i) // _factorial(i)
        _BINOM[key] = v
    return v


def _zero_matrix(n: int):
    return tuple(tuple(() for _ in range(n)) for _ in range(n))


def _is_zero_matrix(mat) -> bool:
    return all(not e for row in mat for e in row)


def _coerce_entry(value) -> tuple:
    if isinstance(value, XPoly):
        return value.coeffs
    if isinstance(value, (int, Fraction, str)):
        return XPoly([value]).coeffs
    return XPoly(value).coeffs


def _max_floor(*floors):
    known = [f for f in floors if f is not None]
    return max(known) if known else None


class MatrixPDO:
    """An element of gl_n of the pseudo-differential ring, truncated below ``order_lo``."""

    __slots__ = ("n", "terms", "order_lo")

    def __init__(self, n: int, terms: Mapping[int, Sequence[Sequence]] | None = None,
                 order_lo: int | None = None):
        self.n = int(n)
        self.order_lo = None if order_lo is None else int(order_lo)
        clean = {}
        for ell, mat in (terms or {}).items():
            ell = int(ell)
            if len(mat) != self.n or any(len(row) != self.n for row in mat):
                raise ValueError(f"coefficient of D^{ell} is not {self.n}x{self.n}")
            mat = tuple(tuple(_coerce_entry(e) for e in row) for row in mat)
            if _is_zero_matrix(mat):
                continue
            if self.order_lo is not None and ell < self.order_lo:
                continue
            clean[ell] = mat
        self.terms = clean

    @classmethod
    def _raw(cls, n: int, terms: dict, order_lo: int | None) -> "MatrixPDO":
        obj = cls.__new__(cls)
        obj.n = n
        obj.order_lo = order_lo
        obj.terms = {l: m for l, m in terms.items()
                     if not _is_zero_matrix(m) and (order_lo is None or l >= order_lo)}
        return obj

    # -- constructors -----------------------------------------------------

    @classmethod
    def scalar(cls, terms: Mapping[int, object], order_lo: int | None = None) -> "MatrixPDO":
        """1x1 operator from ``{order: polynomial}``."""
        return cls(1, {l: [[p]] for l, p in terms.items()}, order_lo)

    @classmethod
    def identity(cls, n: int) -> "MatrixPDO":
        return cls.diagonal_d(n, 0, [1] * n)

    @classmethod
    def zero(cls, n: int, order_lo: int | None = None) -> "MatrixPDO":
        return cls(n, {}, order_lo)

    @classmethod
    def diagonal_d(cls, n: int, power: int, diag: Sequence) -> "MatrixPDO":
        """``diag(c_1, ..., c_n) D^power`` with constant ``c_i``."""
        mat = [[diag[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls(n, {power: mat})

    @classmethod
    def elementary(cls, n: int, i: int, j: int, power: int, coeff=1) -> "MatrixPDO":
        """``coeff * E_ij D^power`` (0-based indices); ``coeff`` may be a polynomial."""
        mat = [[coeff if (r, s) == (i, j) else 0 for s in range(n)] for r in range(n)]
        return cls(n, {power: mat})

    # -- accessors --------------------------------------------------------

    @property
    def order_hi(self) -> int | None:
        return max(self.terms) if self.terms else None

    @property
    def min_order(self) -> int | None:
        return min(self.terms) if self.terms else None

    @property
    def x_cap(self) -> int:
        """Largest x-degree among the stored coefficients (-1 for the zero operator)."""
        return max((len(e) - 1 for m in self.terms.values() for row in m for e in row), default=-1)

    @property
    def is_exact(self) -> bool:
        return self.order_lo is None

    def coeff(self, ell: int) -> list[list[XPoly]]:
        if self.order_lo is not None and ell < self.order_lo:
            raise TruncationError(f"order {ell} is below the truncation floor {self.order_lo}")
        mat = self.terms.get(ell)
        if mat is None:
            return [[XPoly() for _ in range(self.n)] for _ in range(self.n)]
        return [[XPoly(e) for e in row] for row in mat]

    def entry(self, i: int, j: int) -> "MatrixPDO":
        """Scalar operator in position ``(i, j)``."""
        return MatrixPDO._raw(1, {l: ((m[i][j],),) for l, m in self.terms.items()}, self.order_lo)

    # -- linear structure -------------------------------------------------

    def _combine(self, other: "MatrixPDO", sign: int) -> "MatrixPDO":
        if self.n != other.n:
            raise ValueError(f"size mismatch: {self.n} vs {other.n}")
        floor = _max_floor(self.order_lo, other.order_lo)
        out = {}
        for ell in set(self.terms) | set(other.terms):
            if floor is not None and ell < floor:
                continue
            a = self.terms.get(ell)
            b = other.terms.get(ell)
            if b is None:
                out[ell] = a
                continue
            if sign < 0:
                b = tuple(tuple(poly_scale(e, -1) for e in row) for row in b)
            if a is None:
                out[ell] = b
                continue
            out[ell] = tuple(tuple(poly_add(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))
        return MatrixPDO._raw(self.n, out, floor)

    def __add__(self, other):
        if not isinstance(other, MatrixPDO):
            return NotImplemented
        return self._combine(other, 1)

    def __sub__(self, other):
        if not isinstance(other, MatrixPDO):
            return NotImplemented
        return self._combine(other, -1)

    def scale(self, c) -> "MatrixPDO":
        c = as_rational(c)
        return MatrixPDO._raw(
            self.n,
            {l: tuple(tuple(poly_scale(e, c) for e in row) for row in m) for l, m in self.terms.items()},
            self.order_lo,
        )

    def __neg__(self):
        return self.scale(-1)

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def __matmul__(self, other):
        if not isinstance(other, MatrixPDO):
            return NotImplemented
        return pdo_compose(self, other)

    def truncate(self, floor: int | None) -> "MatrixPDO":
        """Drop orders below ``floor`` and record it as the new truncation floor."""
        if floor is None:
            return self
        floor = _max_floor(floor, self.order_lo)
        return MatrixPDO._raw(self.n, dict(self.terms), floor)

    def truncate_shift(self, max_shift: int) -> "MatrixPDO":
        """Keep monomials ``x^k D^l`` with ``k - l <= max_shift``.

        ``k - l`` is additive under composition (the derivative terms keep it
        fixed), so this is a ring truncation; it is also the z-shift of the
        monomial under the action on Q((z)).
        """
        # Unknown terms x^k D^l (l < floor) all have shift > -floor, so the
        # result is exact as long as max_shift <= -floor.
        if self.order_lo is not None and max_shift > -self.order_lo:
            raise TruncationError("floor too shallow for the requested shift truncation")
        out = {
            ell: tuple(tuple(_trimmed(e[: max(0, max_shift + ell + 1)]) for e in row) for row in m)
            for ell, m in self.terms.items()
        }
        return MatrixPDO._raw(self.n, out, None)

    def x_derivative(self) -> "MatrixPDO":
        """Coefficientwise d/dx (the commutator ``[D, P]``)."""
        return MatrixPDO._raw(
            self.n,
            {l: tuple(tuple(poly_deriv(e, 1) for e in row) for row in m) for l, m in self.terms.items()},
            self.order_lo,
        )

    def transpose(self) -> "MatrixPDO":
        return MatrixPDO._raw(
            self.n,
            {l: tuple(tuple(m[j][i] for j in range(self.n)) for i in range(self.n)) for l, m in self.terms.items()},
            self.order_lo,
        )

    def equals_to_floor(self, other: "MatrixPDO", floor: int | None = None) -> bool:
        """Compare on the orders both operators know (and ``>= floor`` if given)."""
        if self.n != other.n:
            return False
        cut = _max_floor(self.order_lo, other.order_lo, floor)
        zero = _zero_matrix(self.n)
        for ell in set(self.terms) | set(other.terms):
            if cut is not None and ell < cut:
                continue
            if self.terms.get(ell, zero) != other.terms.get(ell, zero):
                return False
        return True

    def is_zero(self, floor: int | None = None) -> bool:
        return self.equals_to_floor(MatrixPDO.zero(self.n), floor)

    def __eq__(self, other):
        if not isinstance(other, MatrixPDO):
            return NotImplemented
        return self.n == other.n and self.order_lo == other.order_lo and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.order_lo, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return f"MatrixPDO(n={self.n}, order_lo={self.order_lo}, {self!s})"

    def __str__(self):
        def scalar_str(get):
            parts = []
            for ell in sorted(self.terms, reverse=True):
                e = get(self.terms[ell])
                if not e:
                    continue
                poly = str(XPoly(e))
                if ell == 0:
                    parts.append(poly)
                    continue
                dpow = "D" if ell == 1 else f"D^{ell}"
                if poly in ("1", "-1"):
                    parts.append(poly[:-1] + dpow)
                elif len([c for c in e if c]) == 1:
                    parts.append(f"{poly}*{dpow}")
                else:
                    parts.append(f"({poly})*{dpow}")
            body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
            if self.order_lo is not None:
                body += f" + O(D^{self.order_lo - 1})"
            return body

        if self.n == 1:
            return scalar_str(lambda m: m[0][0])
        rows = []
        for i in range(self.n):
            rows.append("[" + ", ".join(scalar_str(lambda m, i=i, j=j: m[i][j]) for j in range(self.n)) + "]")
        return "[" + ", ".join(rows) + "]"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "x_cap": self.x_cap,
            "order_lo": self.order_lo,
            "terms": {
                str(ell): [[[format_rational(c) for c in e] for e in row] for row in m]
                for ell, m in sorted(self.terms.items())
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MatrixPDO":
        try:
            n = int(data["n"])
            order_lo = data.get("order_lo")
            terms = {}
            for ell, m in data.get("terms", {}).items():
                terms[int(ell)] = [[[parse_rational(c) if isinstance(c, str) else c for c in e]
                                    for e in row] for row in m]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed operator JSON: {exc}") from exc
        out = cls(n, terms, order_lo)
        cap = data.get("x_cap")
        if cap is not None and out.x_cap > int(cap):
            raise ValueError(f"coefficient degree {out.x_cap} exceeds declared x_cap {cap}")
        return out


def _trimmed(e: tuple) -> tuple:
    e = list(e)
    while e and e[-1] == 0:
        e.pop()
    return tuple(e)


def _product_floor(P: MatrixPDO, Q: MatrixPDO) -> int | None:
    """Lowest order at which ``P @ Q`` is fully determined by the stored data."""
    if not P.terms or not Q.terms:
        # Zero times something truncated is still only known above the floors.
        return _max_floor(P.order_lo, Q.order_lo)
    cands = []
    if P.order_lo is not None:
        cands.append(P.order_lo + Q.order_hi)
    if Q.order_lo is not None:
        cands.append(Q.order_lo + P.order_hi)
    return max(cands) if cands else None


def _accumulate(acc: list, src: tuple):
    if len(acc) < len(src):
        acc.extend([ZERO] * (len(src) - len(acc)))
    for k, c in enumerate(src):
        if c:
            acc[k] += c


def pdo_compose(P: MatrixPDO, Q: MatrixPDO) -> MatrixPDO:
    """Product in the pseudo-differential ring.

    Uses ``D^p a(x) = sum_i C(p, i) a^(i)(x) D^(p-i)`` and keeps every order
    that is determined by the inputs.
    """
    if P.n != Q.n:
        raise ValueError(f"size mismatch: {P.n} vs {Q.n}")
    n = P.n
    floor = _product_floor(P, Q)
    rng = range(n)
    out: dict[int, list] = {}
    derivs: dict[int, list] = {}
    for q, bmat in Q.terms.items():
        maxdeg = max(len(e) for row in bmat for e in row)
        derivs[q] = [tuple(tuple(poly_deriv(e, i) for e in row) for row in bmat) for i in range(maxdeg)]
    for p, amat in P.terms.items():
        for q, dlist in derivs.items():
            for i, bder in enumerate(dlist):
                order = p + q - i
                if floor is not None and order < floor:
                    break
                c = binomial(p, i)
                if c == 0:
                    continue
                slot = out.get(order)
                if slot is None:
                    slot = out[order] = [[[] for _ in rng] for _ in rng]
                for r in rng:
                    arow = amat[r]
                    srow = slot[r]
                    for j in rng:
                        a = arow[j]
                        if not a:
                            continue
                        brow = bder[j]
                        ca = poly_scale(a, c) if c != 1 else a
                        for s in rng:
                            b = brow[s]
                            if b:
                                _accumulate(srow[s], poly_mul(ca, b))
    terms = {
        l: tuple(tuple(_trimmed(tuple(e)) for e in row) for row in m) for l, m in out.items()
    }
    return MatrixPDO._raw(n, terms, floor)


def pdo_adjoint(P: MatrixPDO) -> MatrixPDO:
    """``P* = sum_l D^l a_l(-x)^T``, renormalized to left form."""
    n = P.n
    out: dict[int, list] = {}
    floor = P.order_lo
    for ell, m in P.terms.items():
        for r in range(n):
            for s in range(n):
                b = poly_reflect(m[s][r])
                if not b:
                    continue
                for i in range(len(b)):
                    order = ell - i
                    if floor is not None and order < floor:
                        break
                    c = binomial(ell, i)
                    if c == 0:
                        continue
                    slot = out.get(order)
                    if slot is None:
                        slot = out[order] = [[[] for _ in range(n)] for _ in range(n)]
                    _accumulate(slot[r][s], poly_scale(poly_deriv(b, i), c))
    terms = {l: tuple(tuple(_trimmed(tuple(e)) for e in row) for row in mm) for l, mm in out.items()}
    return MatrixPDO._raw(n, terms, floor)


def _rho_contributions(ell: int, e: tuple):
    # x^k D^l == (-1)^k C(l, k) k! D^(l-k)  modulo the left ideal generated by x
    for k, c in enumerate(e):
        if c:
            w = binomial(ell, k)
            if w:
                yield ell - k, (-1) ** k * w * _factorial(k) * c


def pdo_rho(P: MatrixPDO) -> list[list[TruncatedLaurentSeries]]:
    """Projection onto Q((D^-1)), entrywise.

    Each entry is returned as a series in ``u = D^-1``: the coefficient of
    ``D^m`` sits at ``u``-order ``-m``.  The window ends where the truncation
    floor of ``P`` makes the projection unknown.
    """
    n = P.n
    acc = [[{} for _ in range(n)] for _ in range(n)]
    lowest = 0
    for ell, m in P.terms.items():
        for r in range(n):
            for s in range(n):
                for order, v in _rho_contributions(ell, m[r][s]):
                    if P.order_lo is not None and order < P.order_lo:
                        continue
                    acc[r][s][order] = acc[r][s].get(order, ZERO) + v
                    lowest = min(lowest, order)
    top = P.order_hi if P.order_hi is not None else 0
    lo = -max(top, 0)
    hi = (-P.order_lo + 1) if P.order_lo is not None else (-lowest + 1)
    return [[TruncatedLaurentSeries({-o: v for o, v in acc[r][s].items()}, lo, hi) for s in range(n)]
            for r in range(n)]


def pdo_act(P: MatrixPDO, f: VectorLaurent) -> VectorLaurent:
    """Action on Q((z))^n: ``P.f = rho(P f(D^-1) D^-1)`` read back through ``D^m <-> z^(-m-1)``."""
    if P.n != f.n:
        raise ValueError(f"size mismatch: operator {P.n}, vector {f.n}")
    top = P.order_hi
    if top is None:
        top = 0
    lo = f.lo - top
    hi = f.hi - top
    if P.order_lo is not None:
        hi = min(hi, f.lo - P.order_lo + 1)
    if hi <= lo:
        raise WindowError(f"window underflow acting on [{f.lo}, {f.hi})")
    out = [dict() for _ in range(P.n)]
    fitems = [comp.items() for comp in f]
    for ell, m in P.terms.items():
        for r in range(P.n):
            acc = out[r]
            for s in range(P.n):
                e = m[r][s]
                if not e:
                    continue
                for a, fa in fitems[s]:
                    p = ell - a - 1
                    for k, c in enumerate(e):
                        if not c:
                            continue
                        order = a - ell + k
                        if order >= hi:
                            break
                        w = binomial(p, k)
                        if w:
                            acc[order] = acc.get(order, ZERO) + (-1) ** k * w * _factorial(k) * c * fa
    return VectorLaurent(TruncatedLaurentSeries(out[r], lo, hi) for r in range(P.n))


def pairing(f: VectorLaurent, g: VectorLaurent) -> Fraction:
    """``<f, g>_n``: sum over components of the residue of ``f_i g_i``."""
    if f.n != g.n:
        raise ValueError(f"length mismatch: {f.n} vs {g.n}")
    return sum((residue(series_mul(a, b)) for a, b in zip(f, g)), ZERO)


def pdo_split(P: MatrixPDO) -> tuple[MatrixPDO, MatrixPDO]:
    """``(P_+, P_-)``: orders ``>= 0`` and orders ``<= -1``."""
    if P.order_lo is not None and P.order_lo > 0:
        raise TruncationError(f"differential part unknown: floor {P.order_lo} > 0")
    plus = {l: m for l, m in P.terms.items() if l >= 0}
    minus = {l: m for l, m in P.terms.items() if l < 0}
    return MatrixPDO._raw(P.n, plus, None), MatrixPDO._raw(P.n, minus, P.order_lo)


def _check_monic(S: MatrixPDO):
    ident = MatrixPDO.identity(S.n).terms[0]
    if S.order_lo is not None and S.order_lo > 0:
        raise BigCellError("not in big-cell group: leading term is unknown")
    if any(l > 0 for l in S.terms) or S.terms.get(0) != ident:
        raise BigCellError("not in big-cell group: operator is not I + O(D^-1)")


def _coefficient_at(P: MatrixPDO, Q: MatrixPDO, target: int):
    """Order-``target`` coefficient of ``P @ Q`` (as mutable accumulators)."""
    n = P.n
    slot = [[[] for _ in range(n)] for _ in range(n)]
    for p, amat in P.terms.items():
        for q, bmat in Q.terms.items():
            i = p + q - target
            if i < 0:
                continue
            c = binomial(p, i)
            if c == 0:
                continue
            for r in range(n):
                for j in range(n):
                    a = amat[r][j]
                    if not a:
                        continue
                    for s in range(n):
                        b = bmat[j][s]
                        if len(b) > i:
                            _accumulate(slot[r][s], poly_mul(poly_scale(a, c), poly_deriv(b, i)))
    return slot


def pdo_invert_monic(S: MatrixPDO, floor: int | None = None) -> MatrixPDO:
    """Inverse of a monic order-0 operator, computed order by order.

    The result is exact down to ``floor``, which defaults to the floor of
    ``S``; an exact (finite) ``S`` needs an explicit floor because its inverse
    has an infinite ``D^-1`` tail.
    """
    _check_monic(S)
    if floor is None:
        floor = S.order_lo
    elif S.order_lo is not None:
        floor = max(floor, S.order_lo)
    if floor is None:
        raise TruncationError("inverse of an exact operator needs an explicit floor")
    n = S.n
    N = MatrixPDO._raw(n, {l: m for l, m in S.terms.items() if l < 0}, None)
    inv = {0: S.terms[0]}
    for k in range(1, -floor + 1):
        T = MatrixPDO._raw(n, inv, None)
        slot = _coefficient_at(N, T, -k)
        inv[-k] = tuple(tuple(poly_scale(_trimmed(tuple(e)), -1) for e in row) for row in slot)
    return MatrixPDO._raw(n, inv, floor)


def involution_matrix(m: int) -> list[list[int]]:
    """The ``2m x 2m`` matrix with identity blocks on the antidiagonal."""
    size = 2 * m
    return [[1 if (j == i + m or i == j + m) else 0 for j in range(size)] for i in range(size)]


def conjugate_by_involution(P: MatrixPDO) -> MatrixPDO:
    """``A P A`` for the block antidiagonal involution ``A`` of size ``P.n``."""
    if P.n % 2:
        raise ValueError("odd size: the involution needs n = 2m")
    m = P.n // 2
    sigma = [(i + m) % P.n for i in range(P.n)]
    return MatrixPDO._raw(
        P.n,
        {l: tuple(tuple(mat[sigma[i]][sigma[j]] for j in range(P.n)) for i in range(P.n))
         for l, mat in P.terms.items()},
        P.order_lo,
    )
