"""The eleven acceptance criteria, each run at full scale with exact comparisons.

Every criterion prints one ``PASS``/``FAIL`` line (visible under plain
``pytest``, not only with ``-s``).  Run this file directly with
``python tests/test_acceptance.py`` for the bare report.
"""

import time

import pytest

from hitchin_kp.verify import run_suite

SEED = 1

# (number, title, suite, parameters, runtime budget in seconds or None)
CRITERIA = [
    (1, "adjoint formula <f, P g> = <P* f, g>", "adjoint-formula", dict(count=200), 30),
    (2, "adjoint algebra (P*)* = P, (PQ)* = Q* P*", "adjoint-algebra", dict(count=200), None),
    (3, "rho agrees with the rewriting oracle", "rho-oracle", dict(count=100), None),
    (4, "perp involution and Fredholm duality", "perp-involution", dict(count=100), None),
    (5, "big-cell duality and dressing round trip", "bigcell-duality", dict(count=50, floor=-5), None),
    (6, "Lax operator has no D^0 term", "lax-normalization", dict(count=100), None),
    (7, "KP flows: t1 = x-translation, commutativity, Birkhoff", "kp-flows",
     dict(count=50, mixed_count=20), 300),
    (8, "Sp flows preserve the locus; control breaks it", "sp-reduction", dict(count=20, m=1, t_cap=2), None),
    (9, "Hitchin map equivariance, duality, determinant oracle", "hitchin-algebra", dict(count=200), None),
    (10, "resultant, repeated roots, Hensel splitting", "resultant", dict(count=100, prec=10), None),
    (11, "numerology evaluations", "numerology", dict(), None),
]


def evaluate(number, title, suite, params, budget):
    t0 = time.perf_counter()
    results = run_suite(suite, seed=SEED, **params)
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in results)
    if budget is not None and elapsed >= budget:
        ok = False
    lines = [f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{elapsed:.1f}s"
             + (f" / budget {budget}s]" if budget else "]")]
    lines += ["    " + r.line(timing=False) for r in results]
    return ok, lines, results, elapsed


@pytest.mark.parametrize("number,title,suite,params,budget", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, title, suite, params, budget, capsys):
    ok, lines, results, elapsed = evaluate(number, title, suite, params, budget)
    with capsys.disabled():
        print("\n" + "\n".join(lines))
    failed = [r.line(timing=False) for r in results if not r.passed]
    assert not failed, failed
    if budget is not None:
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


if __name__ == "__main__":
    all_ok = True
    for crit in CRITERIA:
        ok, lines, _, _ = evaluate(*crit)
        all_ok &= ok
        print("\n".join(lines))
    raise SystemExit(0 if all_ok else 1)
