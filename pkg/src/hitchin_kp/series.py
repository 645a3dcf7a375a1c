"""Exact truncated series over the rationals.

Three containers live here:

* :class:`TruncatedLaurentSeries` -- an element of Q((z)) known on a window
  ``[lo, hi)``.  Orders inside the window that are not stored are zero, orders
  below ``lo`` are zero, orders at or above ``hi`` are unknown.
* :class:`VectorLaurent` -- ``n`` such series sharing one window.
* :class:`XPoly` -- a polynomial in ``x`` used as a coefficient function of a
  pseudo-differential operator.

Rationals are :class:`fractions.Fraction` throughout and serialize as
``"p/q"`` strings.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import NotInvertibleError, WindowError

__all__ = [
    "as_rational",
    "parse_rational",
    "format_rational",
    "TruncatedLaurentSeries",
    "VectorLaurent",
    "XPoly",
    "series_mul",
    "series_invert",
    "residue",
]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, float):
        raise TypeError("floats are not accepted; use an exact rational")
    return Fraction(value)


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def format_rational(q: Fraction) -> str:
    q = as_rational(q)
    return f"{q.numerator}/{q.denominator}"


class TruncatedLaurentSeries:
    """A Laurent series in ``z`` known exactly on the window ``[lo, hi)``."""

    __slots__ = ("_coeffs", "lo", "hi")

    def __init__(self, coeffs: Mapping[int, object] | None = None, lo: int = 0, hi: int = 1):
        lo, hi = int(lo), int(hi)
        if hi <= lo:
            raise WindowError(f"window underflow: empty window [{lo}, {hi})")
        clean = {}
        for k, c in (coeffs or {}).items():
            k = int(k)
            c = as_rational(c)
            if c == 0:
                continue
            if not lo <= k < hi:
                raise WindowError(f"order {k} outside window [{lo}, {hi})")
            clean[k] = c
        self._coeffs = clean
        self.lo = lo
        self.hi = hi

    @classmethod
    def monomial(cls, order: int, coeff=1, hi: int | None = None) -> "TruncatedLaurentSeries":
        if hi is None:
            hi = order + 1
        return cls({order: coeff}, lo=order, hi=hi)

    @classmethod
    def from_list(cls, values: Sequence, lo: int = 0, hi: int | None = None) -> "TruncatedLaurentSeries":
        """Coefficients ``values[k]`` at order ``lo + k``."""
        if hi is None:
            hi = lo + len(values)
        return cls({lo + k: v for k, v in enumerate(values)}, lo=lo, hi=hi)

    @classmethod
    def zero(cls, lo: int = 0, hi: int = 1) -> "TruncatedLaurentSeries":
        return cls({}, lo=lo, hi=hi)

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._coeffs)

    def items(self):
        return sorted(self._coeffs.items())

    def __getitem__(self, k: int) -> Fraction:
        if k >= self.hi:
            raise WindowError(f"order {k} is beyond the known window [{self.lo}, {self.hi})")
        return self._coeffs.get(k, ZERO)

    def is_zero(self) -> bool:
        return not self._coeffs

    def valuation(self) -> int | None:
        """Lowest order with nonzero coefficient, or None if zero on the window."""
        return min(self._coeffs) if self._coeffs else None

    def truncate(self, hi: int) -> "TruncatedLaurentSeries":
        hi = min(hi, self.hi)
        return TruncatedLaurentSeries({k: c for k, c in self._coeffs.items() if k < hi}, self.lo, hi)

    def with_window(self, lo: int, hi: int) -> "TruncatedLaurentSeries":
        """Re-window: ``lo`` may drop (zeros below are known), ``hi`` may not grow."""
        if hi > self.hi:
            raise WindowError(f"cannot extend known window to {hi} (known below {self.hi})")
        if lo > self.lo and any(k < lo for k in self._coeffs):
            raise WindowError("cannot raise lo above a nonzero coefficient")
        return TruncatedLaurentSeries({k: c for k, c in self._coeffs.items() if k < hi}, lo, hi)

    def shift(self, k: int) -> "TruncatedLaurentSeries":
        """Multiply by ``z**k``."""
        return TruncatedLaurentSeries({o + k: c for o, c in self._coeffs.items()}, self.lo + k, self.hi + k)

    def scale(self, c) -> "TruncatedLaurentSeries":
        c = as_rational(c)
        return TruncatedLaurentSeries({k: c * v for k, v in self._coeffs.items()}, self.lo, self.hi)

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        lo, hi = min(self.lo, other.lo), min(self.hi, other.hi)
        out = {k: c for k, c in self._coeffs.items() if k < hi}
        for k, c in other._coeffs.items():
            if k < hi:
                out[k] = out.get(k, ZERO) + c
        return TruncatedLaurentSeries(out, lo, hi)

    def __sub__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TruncatedLaurentSeries):
            return series_mul(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def invert(self) -> "TruncatedLaurentSeries":
        return series_invert(self)

    def residue(self) -> Fraction:
        return residue(self)

    def agrees_with(self, other: "TruncatedLaurentSeries") -> bool:
        """Equal on the common known window (below ``min(hi)``)."""
        hi = min(self.hi, other.hi)
        keys = {k for k in self._coeffs if k < hi} | {k for k in other._coeffs if k < hi}
        return all(self._coeffs.get(k, ZERO) == other._coeffs.get(k, ZERO) for k in keys)

    def __eq__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.lo, self.hi, frozenset(self._coeffs.items())))

    def __repr__(self):
        return f"TruncatedLaurentSeries({self._coeffs!r}, lo={self.lo}, hi={self.hi})"

    def __str__(self):
        parts = [_term_str(c, "z", k) for k, c in self.items()]
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O(z^{self.hi})"

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "coeffs": {str(k): format_rational(c) for k, c in self.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "TruncatedLaurentSeries":
        try:
            return cls({int(k): parse_rational(v) for k, v in data["coeffs"].items()},
                       lo=int(data["lo"]), hi=int(data["hi"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed series JSON: {exc}") from exc


def _term_str(c: Fraction, var: str, k: int) -> str:
    if k == 0:
        return str(c)
    mono = var if k == 1 else f"{var}^{k}"
    if c == 1:
        return mono
    if c == -1:
        return f"-{mono}"
    return f"{c}*{mono}"


def series_mul(a: TruncatedLaurentSeries, b: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """Exact product on the largest window where it is determined."""
    lo = a.lo + b.lo
    hi = min(a.lo + b.hi, b.lo + a.hi)
    if hi <= lo:
        raise WindowError(f"window underflow: product of [{a.lo},{a.hi}) and [{b.lo},{b.hi})")
    out: dict[int, Fraction] = {}
    bi = b.items()
    for i, ca in a.items():
        for j, cb in bi:
            k = i + j
            if k >= hi:
                break
            out[k] = out.get(k, ZERO) + ca * cb
    return TruncatedLaurentSeries(out, lo, hi)


def series_invert(a: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """Inverse of ``a`` to the relative precision ``a`` carries.

    The known zeros below the leading term are absorbed first, so the
    product ``a * a.invert()`` has window ``[0, hi - v)`` with ``v`` the
    valuation of ``a``.
    """
    v = a.valuation()
    if v is None:
        raise NotInvertibleError("not invertible: series vanishes on its window")
    if v != a.lo:
        raise NotInvertibleError(f"not invertible: zero leading coefficient at order {a.lo}")
    prec = a.hi - v
    unit = [a[v + k] for k in range(prec)]
    lead = unit[0]
    inv = [ONE / lead]
    for k in range(1, prec):
        acc = ZERO
        for i in range(1, k + 1):
            if unit[i]:
                acc += unit[i] * inv[k - i]
        inv.append(-acc / lead)
    return TruncatedLaurentSeries.from_list(inv, lo=-v, hi=-v + prec)


def residue(a: TruncatedLaurentSeries) -> Fraction:
    """Coefficient of ``z**-1``."""
    if a.hi <= -1:
        raise WindowError(f"residue outside window [{a.lo}, {a.hi})")
    return a._coeffs.get(-1, ZERO)


class VectorLaurent:
    """An element of Q((z))^n: ``n`` series on one common window."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[TruncatedLaurentSeries]):
        comps = tuple(components)
        if not comps:
            raise ValueError("VectorLaurent needs at least one component")
        lo, hi = comps[0].lo, comps[0].hi
        if any(c.lo != lo or c.hi != hi for c in comps):
            raise WindowError("components of a VectorLaurent must share one window")
        self.components = comps

    @classmethod
    def aligned(cls, components: Iterable[TruncatedLaurentSeries]) -> "VectorLaurent":
        """Bring components to their common window before wrapping."""
        comps = list(components)
        lo = min(c.lo for c in comps)
        hi = min(c.hi for c in comps)
        return cls(c.with_window(lo, hi) for c in comps)

    @classmethod
    def unit(cls, n: int, i: int, order: int, lo: int, hi: int, coeff=1) -> "VectorLaurent":
        """``coeff * e^i z^order`` on window ``[lo, hi)``; ``i`` is 0-based."""
        return cls(
            TruncatedLaurentSeries({order: coeff} if c == i else {}, lo, hi) for c in range(n)
        )

    @classmethod
    def from_dict(cls, n: int, entries: Mapping[tuple[int, int], object], lo: int, hi: int) -> "VectorLaurent":
        """Build from ``{(component, order): coeff}`` with 0-based components."""
        per = [dict() for _ in range(n)]
        for (i, k), c in entries.items():
            per[i][k] = c
        return cls(TruncatedLaurentSeries(p, lo, hi) for p in per)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def lo(self) -> int:
        return self.components[0].lo

    @property
    def hi(self) -> int:
        return self.components[0].hi

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def entries(self) -> dict[tuple[int, int], Fraction]:
        return {(i, k): c for i, comp in enumerate(self.components) for k, c in comp.items()}

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other):
        return VectorLaurent.aligned(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        return VectorLaurent.aligned(a - b for a, b in zip(self, other))

    def __neg__(self):
        return VectorLaurent(-c for c in self.components)

    def scale(self, c):
        return VectorLaurent(comp.scale(c) for comp in self.components)

    def truncate(self, hi: int) -> "VectorLaurent":
        return VectorLaurent(c.truncate(hi) for c in self.components)

    def with_window(self, lo: int, hi: int) -> "VectorLaurent":
        return VectorLaurent(c.with_window(lo, hi) for c in self.components)

    def multiply(self, a: "VectorLaurent") -> "VectorLaurent":
        """Componentwise product (diagonal multiplication)."""
        if a.n != self.n:
            raise ValueError("length mismatch")
        return VectorLaurent.aligned(series_mul(x, y) for x, y in zip(a, self))

    def agrees_with(self, other: "VectorLaurent") -> bool:
        return all(a.agrees_with(b) for a, b in zip(self, other))

    def __eq__(self, other):
        if not isinstance(other, VectorLaurent):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return f"VectorLaurent({list(self.components)!r})"

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.components) + ")"

    def to_json(self) -> list:
        return [c.to_json() for c in self.components]

    @classmethod
    def from_json(cls, data) -> "VectorLaurent":
        if not isinstance(data, list):
            raise ValueError("vector-laurent JSON must be a list of series")
        return cls(TruncatedLaurentSeries.from_json(c) for c in data)


def _trim(coeffs) -> tuple:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class XPoly:
    """Polynomial ``sum c_k x^k`` with rational coefficients (trailing zeros trimmed)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        self.coeffs = _trim(as_rational(c) for c in coeffs)

    @classmethod
    def constant(cls, c) -> "XPoly":
        return cls([c])

    @classmethod
    def x(cls) -> "XPoly":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x0) -> Fraction:
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x0 + c
        return acc

    def __add__(self, other):
        other = _as_xpoly(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return XPoly(a[i] + (b[i] if i < len(b) else 0) for i in range(len(a)))

    __radd__ = __add__

    def __neg__(self):
        return XPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-_as_xpoly(other))

    def __rsub__(self, other):
        return _as_xpoly(other) - self

    def __mul__(self, other):
        other = _as_xpoly(other)
        return XPoly(poly_mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def derivative(self, order: int = 1) -> "XPoly":
        return XPoly(poly_deriv(self.coeffs, order))

    def reflect(self) -> "XPoly":
        """``a(x) -> a(-x)``."""
        return XPoly(poly_reflect(self.coeffs))

    def __eq__(self, other):
        try:
            other = _as_xpoly(other)
        except TypeError:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"XPoly({[str(c) for c in self.coeffs]})"

    def __str__(self):
        parts = [_term_str(c, "x", k) for k, c in enumerate(self.coeffs) if c]
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data) -> "XPoly":
        if not isinstance(data, list):
            raise ValueError("x-polynomial JSON must be a list of rationals")
        return cls(parse_rational(c) if isinstance(c, str) else c for c in data)


def _as_xpoly(value) -> XPoly:
    if isinstance(value, XPoly):
        return value
    if isinstance(value, (int, Fraction, str)):
        return XPoly([value])
    if isinstance(value, (list, tuple)):
        return XPoly(value)
    raise TypeError(f"cannot interpret {value!r} as a polynomial in x")


# Raw tuple kernels; the operator code calls these directly to avoid wrapping.

def poly_add(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def poly_mul(a: tuple, b: tuple) -> tuple:
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            if cb:
                out[i + j] += ca * cb
    return _trim(out)


def poly_scale(a: tuple, c) -> tuple:
    if not c:
        return ()
    return tuple(c * v for v in a)


_FALLING: dict[tuple[int, int], int] = {}


def falling(k: int, i: int) -> int:
    """``k (k-1) ... (k-i+1)``."""
    key = (k, i)
    v = _FALLING.get(key)
    if v is None:
        v = 1
        for t in range(i):
            v *= k - t
        _FALLING[key] = v
    return v


def poly_deriv(a: tuple, order: int) -> tuple:
    if order == 0:
        return a
    if order >= len(a):
        return ()
    return tuple(falling(k, order) * a[k] for k in range(order, len(a)))


def poly_reflect(a: tuple) -> tuple:
    return tuple(-c if k % 2 else c for k, c in enumerate(a))
