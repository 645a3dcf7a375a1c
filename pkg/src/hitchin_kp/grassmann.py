"""Finite-window model of the Sato Grassmannian of Q((z))^n.

A point is stored as a reduced echelon basis ``V`` of vectors supported on
the window ``[-M, N)``; the subspace it models is

    W = V  (+)  span{ e^i z^-j : j > M }.

Positions ``(i, k)`` (component ``i``, order ``k``) are flattened to
``(k + M) * n + i``, so that the pivot of every basis vector is its lowest
position and the basis is reduced against all pivots.

Points built from dressing operators are window sections: ``V`` is the image
of ``W`` intersected with ``z^-M Q[[z]]`` in ``z^-M Q[[z]] / z^N Q[[z]]``.
The gauge group acts on these sections, so quotient questions are decided
there.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import BigCellError, WindowError
from .linalg import rref, solve
from .pdo import MatrixPDO, _factorial, binomial, pdo_act, pdo_invert_monic
from .series import TruncatedLaurentSeries, VectorLaurent

__all__ = [
    "GrassmannPoint",
    "FredholmData",
    "GammaElement",
    "TangentVector",
    "make_point",
    "standard_point",
    "fredholm_data",
    "perp",
    "from_dressing",
    "to_dressing",
    "quotient_equal",
    "gamma_act",
    "kp_tangent",
]

ZERO = Fraction(0)


class GrassmannPoint:
    """Eventually-standard point: reduced echelon basis on the window ``[-M, N)``."""

    __slots__ = ("n", "M", "N", "basis", "pivots")

    def __init__(self, n: int, M: int, N: int, basis: Sequence[Sequence[Fraction]], pivots: Sequence[int]):
        if n < 1 or M < 0 or N < 0:
            raise ValueError("need n >= 1 and M, N >= 0")
        self.n, self.M, self.N = n, M, N
        self.basis = tuple(tuple(r) for r in basis)
        self.pivots = tuple(pivots)

    # -- coordinates ------------------------------------------------------

    @property
    def size(self) -> int:
        return self.n * (self.M + self.N)

    def position(self, idx: int) -> tuple[int, int]:
        """``(component, order)`` of a flat coordinate."""
        return idx % self.n, idx // self.n - self.M

    def index_of(self, i: int, k: int) -> int:
        return (k + self.M) * self.n + i

    def to_vector(self, row: Sequence[Fraction]) -> VectorLaurent:
        lo, hi = -self.M, self.N
        if hi <= lo:
            hi = lo + 1
        return VectorLaurent.from_dict(
            self.n, {self.position(j): c for j, c in enumerate(row) if c}, lo, hi
        )

    @property
    def generators(self) -> list[VectorLaurent]:
        return [self.to_vector(r) for r in self.basis]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def pivot_positions(self) -> list[tuple[int, int]]:
        return [self.position(p) for p in self.pivots]

    # -- comparison -------------------------------------------------------

    def widen(self, M: int, N: int) -> "GrassmannPoint":
        """Same subspace described on the larger window ``[-M, N)``."""
        if M < self.M or N < self.N:
            raise WindowError("widen can only enlarge the window")
        n = self.n
        size = n * (M + N)
        rows = []
        shift = (M - self.M) * n
        for r in self.basis:
            new = [ZERO] * size
            new[shift: shift + len(r)] = r
            rows.append(new)
        for j in range(self.M + 1, M + 1):
            for i in range(n):
                new = [ZERO] * size
                new[(M - j) * n + i] = Fraction(1)
                rows.append(new)
        return _from_rows(n, M, N, rows)

    def __eq__(self, other):
        if not isinstance(other, GrassmannPoint):
            return NotImplemented
        if self.n != other.n:
            return False
        M, N = max(self.M, other.M), max(self.N, other.N)
        a, b = self.widen(M, N), other.widen(M, N)
        return a.basis == b.basis

    def __hash__(self):
        return hash((self.n, self.dim - self.n * self.M))

    def __repr__(self):
        return f"GrassmannPoint(n={self.n}, M={self.M}, N={self.N}, dim={self.dim})"

    def __str__(self):
        gens = ", ".join(str(g) for g in self.generators) or "-"
        return f"W[n={self.n}, window=[-{self.M},{self.N})]: {gens} (+ standard tail)"

    def to_json(self) -> dict:
        return {"n": self.n, "M": self.M, "N": self.N, "generators": [g.to_json() for g in self.generators]}

    @classmethod
    def from_json(cls, data: Mapping) -> "GrassmannPoint":
        try:
            n, M, N = int(data["n"]), int(data["M"]), int(data["N"])
            gens = [VectorLaurent.from_json(g) for g in data.get("generators", [])]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed point JSON: {exc}") from exc
        return make_point(n, M, N, gens)


def _from_rows(n: int, M: int, N: int, rows) -> GrassmannPoint:
    size = n * (M + N)
    red, pivots = rref(rows, size) if rows else ([], [])
    return GrassmannPoint(n, M, N, red, pivots)


def make_point(n: int, M: int, N: int, raw_generators: Iterable[VectorLaurent | Mapping] = ()) -> GrassmannPoint:
    """Echelonize generators into a point.

    Generators may be VectorLaurent values or ``{(component, order): coeff}``
    maps.  Coefficients below ``-M`` lie in the standard tail and are reduced
    away; support at order ``>= N`` is rejected.
    """
    size = n * (M + N)
    rows = []
    for g in raw_generators:
        if isinstance(g, VectorLaurent):
            if g.n != n:
                raise ValueError(f"generator has {g.n} components, expected {n}")
            entries = g.entries()
        else:
            entries = dict(g)
        row = [ZERO] * size
        for (i, k), c in entries.items():
            if not 0 <= i < n:
                raise ValueError(f"component {i} out of range")
            if k >= N:
                raise WindowError(f"generator has support at order {k} >= N = {N}")
            if k < -M:
                continue
            row[(k + M) * n + i] = Fraction(c)
        if any(row):
            rows.append(row)
    return _from_rows(n, M, N, rows)


def standard_point(n: int, M: int = 0, N: int = 0) -> GrassmannPoint:
    """``Q[z^-1]^n z^-1`` described on the window ``[-M, N)``."""
    return GrassmannPoint(n, 0, 0, [], []).widen(M, N)


class FredholmData:
    """Kernel and cokernel of the comparison map ``W -> Q((z))^n / Q[[z]]^n``."""

    __slots__ = ("kernel_basis", "cokernel_basis", "index")

    def __init__(self, kernel_basis, cokernel_basis):
        self.kernel_basis = list(kernel_basis)
        self.cokernel_basis = list(cokernel_basis)
        self.index = len(self.kernel_basis) - len(self.cokernel_basis)

    def __repr__(self):
        return (f"FredholmData(kernel={len(self.kernel_basis)}, "
                f"cokernel={len(self.cokernel_basis)}, index={self.index})")

    def to_json(self) -> dict:
        return {
            "kernel": [v.to_json() for v in self.kernel_basis],
            "cokernel": [{"component": i, "order": k} for i, k in self.cokernel_basis],
            "index": self.index,
        }


def fredholm_data(W: GrassmannPoint) -> FredholmData:
    """Kernel: basis vectors pivoting at order >= 0.  Cokernel: unhit monomials ``e^i z^k``, ``-M <= k <= -1``.

    Cokernel classes are reported as ``(component, order)`` pairs (0-based components).
    """
    kernel = [W.to_vector(r) for r, p in zip(W.basis, W.pivots) if W.position(p)[1] >= 0]
    hit = set(W.pivots)
    coker = [W.position(q) for q in range(W.n * W.M) if q not in hit]
    return FredholmData(kernel, coker)


def perp(W: GrassmannPoint) -> GrassmannPoint:
    """Orthogonal complement under the residue pairing, on the window ``[-N, M)``.

    Each non-pivot position ``q = (i, k)`` of ``V`` gives the solution
    ``e^i z^(-1-k) - sum_p c_pq e^(i_p) z^(-1-k_p)`` where ``c_pq`` is the
    ``q``-coordinate of the basis vector with pivot ``p``; these are
    orthogonal to ``V`` by construction and span the complement.
    """
    n, M, N = W.n, W.M, W.N
    size = n * (M + N)
    dual = GrassmannPoint(n, N, M, [], [])
    piv = set(W.pivots)
    rows = []
    for q in range(size):
        if q in piv:
            continue
        i, k = W.position(q)
        row = [ZERO] * size
        row[dual.index_of(i, -1 - k)] = Fraction(1)
        for r, p in zip(W.basis, W.pivots):
            c = r[q]
            if c:
                ip, kp = W.position(p)
                row[dual.index_of(ip, -1 - kp)] -= c
        rows.append(row)
    return _from_rows(n, N, M, rows)


def _inverse_for_window(S: MatrixPDO, M: int, N: int) -> MatrixPDO:
    need = 1 - M - N
    if S.order_lo is not None and S.order_lo > need:
        raise WindowError(
            f"window too small: [-{M}, {N}) needs the operator down to D^{need}, floor is {S.order_lo}"
        )
    return pdo_invert_monic(S, need)


def from_dressing(S: MatrixPDO, M: int, N: int) -> GrassmannPoint:
    """Window section of ``S^-1 Q[z^-1]^n z^-1``.

    Needs ``S`` known down to ``D^(1-M-N)``: every coefficient that reaches
    the window is then determined.
    """
    R = _inverse_for_window(S, M, N)
    return _act_on_standard(R, M, N)


def _act_on_standard(R: MatrixPDO, M: int, N: int) -> GrassmannPoint:
    n = R.n
    gens = []
    for j in range(1, M + 1):
        for i in range(n):
            f = VectorLaurent.unit(n, i, -j, -j, N)
            g = pdo_act(R, f)
            if g.hi < N:
                raise WindowError(f"window too small: image known only below {g.hi}")
            gens.append(g.truncate(N))
    return make_point(n, M, N, gens)


def _shift_matrix(s: int, js: Sequence[int]):
    """Rows ``j``, columns ``l = -s..-1``: coefficient of ``z^(s-j)`` in ``x^(s+l) D^l . z^-j``."""
    cols = list(range(-s, 0))
    mat = []
    for j in js:
        row = []
        for ell in cols:
            k = s + ell
            row.append(Fraction((-1) ** k * _factorial(k) * binomial(ell + j - 1, k)))
        mat.append(row)
    return cols, mat


def to_dressing(W: GrassmannPoint) -> MatrixPDO:
    """A monic ``S`` with ``from_dressing(S, M, N) == W``.

    The inverse ``R = S^-1`` is solved grade by grade in the shift
    ``s = k - l`` of its monomials ``x^k D^l``; grades ``s <= min(M, N)`` are
    determined by the point, higher grades only partially.  Unconstrained
    coefficients are set to zero, preferring low x-degree.
    """
    fd = fredholm_data(W)
    if fd.kernel_basis or fd.cokernel_basis:
        raise BigCellError(
            f"big-cell violation: kernel {len(fd.kernel_basis)}, cokernel {len(fd.cokernel_basis)}"
        )
    n, M, N = W.n, W.M, W.N
    floor = 1 - M - N
    # basis vector with pivot at (r, -j), by (r, j)
    wvec = {}
    for row, p in zip(W.basis, W.pivots):
        r, k = W.position(p)
        wvec[(r, -k)] = row
    # R e^i z^-j, accumulated as (component, order) -> value, per (i, j)
    images = {(i, j): {(i, -j): Fraction(1)} for i in range(n) for j in range(1, M + 1)}
    terms: dict[int, list] = {}
    for s in range(1, M + N):
        js = [j for j in range(1, M + 1) if 0 <= s - j < N]
        cols, A = _shift_matrix(s, js)
        # Column preference: lowest x-degree first, i.e. l = -s, -s+1, ...
        for i in range(n):
            for r in range(n):
                rhs = []
                for j in js:
                    o = s - j
                    # required value at (r, o): sum over pivot coordinates of u = R e^i z^-j
                    total = ZERO
                    for (rr, oo), u in images[(i, j)].items():
                        if oo < 0:
                            total += u * wvec[(rr, -oo)][W.index_of(r, o)]
                    rhs.append(total)
                if js:
                    sol = solve(A, rhs)
                    if sol is None:
                        raise BigCellError(f"big-cell violation: no operator matches grade {s}")
                else:
                    sol = [ZERO] * len(cols)
                for ell, c in zip(cols, sol):
                    if not c:
                        continue
                    k = s + ell
                    mat = terms.setdefault(ell, [[[ZERO] * (M + N + 1) for _ in range(n)] for _ in range(n)])
                    mat[r][i][k] += c
                    # update images for every j: contributes at order s - j
                    for j in range(1, M + 1):
                        o = s - j
                        if o >= N:
                            continue
                        v = c * (-1) ** k * _factorial(k) * binomial(ell + j - 1, k)
                        if v:
                            img = images[(i, j)]
                            img[(r, o)] = img.get((r, o), ZERO) + v
    R_terms = {0: [[1 if a == b else 0 for b in range(n)] for a in range(n)]}
    for ell, mat in terms.items():
        R_terms[ell] = mat
    R = MatrixPDO(n, R_terms, floor)
    return pdo_invert_monic(R, floor)


class GammaElement:
    """Diagonal ``diag(gamma_1, ..., gamma_n)`` of power series with common constant term."""

    __slots__ = ("diag",)

    def __init__(self, diag: Sequence[TruncatedLaurentSeries]):
        diag = list(diag)
        if not diag:
            raise ValueError("empty gauge element")
        consts = {g[0] for g in diag}
        if len(consts) != 1 or ZERO in consts:
            raise ValueError("constant terms must be equal and nonzero")
        if any(g.lo < 0 and g.valuation() is not None and g.valuation() < 0 for g in diag):
            raise ValueError("gauge elements have no negative orders")
        self.diag = diag

    @property
    def n(self) -> int:
        return len(self.diag)

    def is_identity(self) -> bool:
        return all(g.coeffs == {0: Fraction(1)} for g in self.diag)

    def __repr__(self):
        return "GammaElement(" + ", ".join(str(g) for g in self.diag) + ")"

    def to_json(self) -> list:
        return [g.to_json() for g in self.diag]


def gamma_act(gamma: GammaElement, W: GrassmannPoint) -> GrassmannPoint:
    """``gamma . W`` on the window section."""
    n, M, N = W.n, W.M, W.N
    rows = []
    for row in W.basis:
        out = [ZERO] * W.size
        for q, c in enumerate(row):
            if not c:
                continue
            i, k = W.position(q)
            for e, gc in gamma.diag[i].items():
                if e < 0:
                    continue
                if k + e < N:
                    out[W.index_of(i, k + e)] += c * gc
        rows.append(out)
    return _from_rows(n, M, N, rows)


def _reduce(W: GrassmannPoint, row: list) -> list:
    """Remainder of ``row`` modulo the span of ``W``'s reduced basis."""
    out = list(row)
    for b, p in zip(W.basis, W.pivots):
        c = out[p]
        if c:
            out = [x - c * y for x, y in zip(out, b)]
    return out


def quotient_equal(W1: GrassmannPoint, W2: GrassmannPoint) -> GammaElement | None:
    """A gauge element ``gamma`` (constant term 1) with ``gamma . W1 = W2``, or None.

    Unknowns are the coefficients of ``z^1 .. z^(M+N-1)`` in each
    ``gamma_i``; the membership conditions are linear in them.
    """
    if W1.n != W2.n:
        return None
    n = W1.n
    M, N = max(W1.M, W2.M), max(W1.N, W2.N)
    A, B = W1.widen(M, N), W2.widen(M, N)
    if A.dim != B.dim:
        return None
    K = max(M + N - 1, 0)
    nunk = n * K
    eqs, rhs = [], []
    for row in A.basis:
        # gamma . row = row + sum_{i,e} g_{i,e} z^e (row restricted to component i)
        base = _reduce(B, row)
        cols = []
        for i in range(n):
            for e in range(1, K + 1):
                shifted = [ZERO] * A.size
                for q, c in enumerate(row):
                    if c:
                        ii, k = A.position(q)
                        if ii == i and k + e < N:
                            shifted[A.index_of(i, k + e)] = c
                cols.append(_reduce(B, shifted))
        for q in range(A.size):
            coeffs = [col[q] for col in cols]
            if base[q] or any(coeffs):
                eqs.append(coeffs)
                rhs.append(-base[q])
    if eqs:
        sol = solve(eqs, rhs)
        if sol is None:
            return None
    else:
        sol = [ZERO] * nunk
    diag = []
    for i in range(n):
        coeffs = {0: 1}
        coeffs.update({e: sol[i * K + e - 1] for e in range(1, K + 1)})
        diag.append(TruncatedLaurentSeries(coeffs, 0, K + 1))
    return GammaElement(diag)


class TangentVector:
    """Class of ``w -> a.w`` modulo ``W`` and the infinitesimal gauge action.

    ``rows`` holds one remainder per basis vector in the domain (those whose
    product with ``a`` stays in the window), each known below ``cut``.
    """

    __slots__ = ("domain", "rows", "cut")

    def __init__(self, domain, rows, cut):
        self.domain = list(domain)
        self.rows = list(rows)
        self.cut = cut

    def is_zero(self) -> bool:
        return all(r.is_zero() for r in self.rows)

    def __repr__(self):
        return f"TangentVector(domain={len(self.domain)}, zero={self.is_zero()})"

    def to_json(self) -> dict:
        return {
            "zero": self.is_zero(),
            "cut": self.cut,
            "rows": [r.to_json() for r in self.rows],
        }


def _multiply_row(W: GrassmannPoint, a_entries: Mapping[tuple[int, int], Fraction], row, cut: int) -> list:
    out = [ZERO] * W.size
    for q, c in enumerate(row):
        if not c:
            continue
        i, k = W.position(q)
        for (ia, e), ac in a_entries.items():
            if ia == i and -W.M <= k + e < cut:
                out[W.index_of(i, k + e)] += c * ac
    return out


def _tangent_block(W, a_entries, domain, cut):
    block = []
    for d in domain:
        red = _reduce(W, _multiply_row(W, a_entries, W.basis[d], cut))
        block.extend(c if W.position(q)[1] < cut else ZERO for q, c in enumerate(red))
    return block


def kp_tangent(a: VectorLaurent, W: GrassmannPoint) -> TangentVector:
    """First-order KP flow of the multiplier ``a`` at ``W``.

    With ``d`` the pole order of ``a``, the domain is the basis vectors
    pivoting at order ``>= -M + d`` and products are kept below ``N - d``.
    The infinitesimal gauge action ``z^e E_ii`` is reduced away by exact
    elimination on the stacked remainders.
    """
    if a.n != W.n:
        raise ValueError("multiplier and point have different sizes")
    entries = a.entries()
    d = max(0, -min((k for _, k in entries), default=0))
    cut = W.N - d
    if cut <= -W.M:
        raise WindowError(f"window underflow: pole order {d} exhausts the window")
    if a.hi < W.N + W.M:
        raise WindowError("multiplier is not known far enough for the window")
    domain = [idx for idx, p in enumerate(W.pivots) if W.position(p)[1] >= -W.M + d]
    target = _tangent_block(W, entries, domain, cut)
    gauge = []
    for i in range(W.n):
        for e in range(1, W.M + W.N):
            g = _tangent_block(W, {(i, e): Fraction(1)}, domain, cut)
            if any(g):
                gauge.append(g)
    if gauge and any(target):
        red, pivots = rref(gauge, len(target))
        for row, p in zip(red, pivots):
            c = target[p]
            if c:
                target = [x - c * y for x, y in zip(target, row)]
    rows = []
    for b, d_idx in enumerate(domain):
        chunk = target[b * W.size:(b + 1) * W.size]
        rows.append(W.to_vector(chunk))
    return TangentVector([W.to_vector(W.basis[x]) for x in domain], rows, cut)
