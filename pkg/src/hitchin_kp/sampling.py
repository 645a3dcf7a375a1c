"""Seeded random instances for property checks.

Everything draws from an explicit ``random.Random`` so that a seed fixes the
whole population.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .grassmann import GrassmannPoint, make_point
from .kp import sp_seed
from .pdo import MatrixPDO
from .series import TruncatedLaurentSeries, VectorLaurent
from .spectral import HiggsMatrix, LaurentPoly


def rational(rng: random.Random, bound: int = 3, den: int = 2) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, den))


def nonzero_rational(rng: random.Random, bound: int = 3, den: int = 2) -> Fraction:
    while True:
        q = rational(rng, bound, den)
        if q:
            return q


def poly(rng: random.Random, max_deg: int, density: float = 0.6, bound: int = 3, den: int = 2) -> list[Fraction]:
    return [rational(rng, bound, den) if rng.random() < density else Fraction(0) for _ in range(max_deg + 1)]


def pdo(rng: random.Random, n: int, lo: int, hi: int, x_cap: int, density: float = 0.5) -> MatrixPDO:
    """Finite (exact) operator with orders in ``[lo, hi]`` and coefficients of degree ``<= x_cap``."""
    terms = {}
    for ell in range(lo, hi + 1):
        if rng.random() < density:
            terms[ell] = [[poly(rng, rng.randint(0, x_cap), 0.5) if rng.random() < 0.7 else []
                           for _ in range(n)] for _ in range(n)]
    return MatrixPDO(n, terms)


def monic(rng: random.Random, n: int, floor: int, x_cap: int = 2, depth: int | None = None,
          density: float = 0.6) -> MatrixPDO:
    """``I + sum_{l=-1}^{-depth} a_l D^l`` with random polynomial ``a_l``, truncated at ``floor``."""
    if depth is None:
        depth = -floor
    terms = {0: [[1 if i == j else 0 for j in range(n)] for i in range(n)]}
    for k in range(1, min(depth, -floor) + 1):
        terms[-k] = [[poly(rng, rng.randint(0, x_cap), density, bound=2) if rng.random() < density else []
                      for _ in range(n)] for _ in range(n)]
    return MatrixPDO(n, terms, floor)


def laurent_vector(rng: random.Random, n: int, lo: int, hi: int, window_hi: int, density: float = 0.5) -> VectorLaurent:
    """Exact Laurent polynomial vector with support in ``[lo, hi]`` on the window ``[lo, window_hi)``."""
    comps = []
    for _ in range(n):
        coeffs = {k: rational(rng) for k in range(lo, hi + 1) if rng.random() < density}
        comps.append(TruncatedLaurentSeries(coeffs, lo, window_hi))
    return VectorLaurent(comps)


def point(rng: random.Random, n: int, M: int, N: int) -> GrassmannPoint:
    """Random eventually-standard point: a random number of sparse generators on ``[-M, N)``."""
    size = n * (M + N)
    count = rng.randint(0, size)
    gens = []
    for _ in range(count):
        entries = {}
        for i in range(n):
            for k in range(-M, N):
                if rng.random() < 0.35:
                    entries[(i, k)] = rational(rng)
        gens.append(entries)
    return make_point(n, M, N, gens)


def sp_dressing(rng: random.Random, m: int, floor: int, x_cap: int = 1) -> MatrixPDO:
    """Generic point of the Sp locus built from random free data."""
    n = 2 * m
    seed_terms = {
        k: [[poly(rng, rng.randint(0, x_cap), 0.7, bound=2) for _ in range(n)] for _ in range(n)]
        for k in range(1, -floor + 1)
    }
    return sp_seed(m, seed_terms, floor)


def laurent_poly(rng: random.Random, lo: int = -1, hi: int = 2, density: float = 0.5) -> LaurentPoly:
    return LaurentPoly({k: rational(rng) for k in range(lo, hi + 1) if rng.random() < density})


def higgs(rng: random.Random, n: int, lo: int = -1, hi: int = 2) -> HiggsMatrix:
    return HiggsMatrix([[laurent_poly(rng, lo, hi) for _ in range(n)] for _ in range(n)])


def choose(rng: random.Random, options: Sequence):
    return options[rng.randrange(len(options))]
