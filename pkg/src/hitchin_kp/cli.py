"""Command-line entry point: ``hitchin-kp <group> <command> [options] < input.json``.

Exit status: 0 on success, 1 when a check fails or a computation is refused
(e.g. a point outside the big cell), 2 on usage errors or malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any

from .errors import KPError
from .grassmann import (
    GrassmannPoint,
    fredholm_data,
    from_dressing,
    kp_tangent,
    make_point,
    perp,
    quotient_equal,
    to_dressing,
)
from .kp import FlowTimes, dress, evolve, kp_vector_field, sp_check, sp_evolve, sp_residual_series
from .pdo import MatrixPDO, pairing, pdo_act, pdo_adjoint, pdo_rho
from .series import VectorLaurent, format_rational, parse_rational
from .spectral import (
    HiggsMatrix,
    HitchinPoint,
    hensel_split,
    hitchin_map,
    numerology,
    ramification_resultant,
    serre_dual_point,
    sp_membership,
    weighted_scale,
)
from .verify import SUITES, run_suite


class InputError(Exception):
    """Malformed or missing input (exit status 2)."""


class CheckFailed(Exception):
    """A verification reported failure (exit status 1); carries the report."""

    def __init__(self, payload, text):
        super().__init__(text)
        self.payload = payload
        self.text = text


def _read_input(args) -> dict:
    try:
        if args.input:
            with open(args.input, encoding="utf-8") as fh:
                raw = fh.read()
        else:
            raw = sys.stdin.read()
    except OSError as exc:
        raise InputError(f"cannot read input: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON input: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("input must be a JSON object")
    return data


def _field(data: dict, key: str, alt: tuple = ()):
    for k in (key,) + alt:
        if k in data:
            return data[k]
    raise InputError(f"input is missing the field {key!r}")


def _operator(args, value) -> MatrixPDO:
    try:
        P = MatrixPDO.from_json(value)
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise InputError(str(exc)) from exc
    if args.x_cap is not None and P.x_cap > args.x_cap:
        raise InputError(f"operator has x-degree {P.x_cap} above --x-cap {args.x_cap}")
    if args.order_lo is not None:
        P = P.truncate(args.order_lo)
    return P


def _vector(value) -> VectorLaurent:
    try:
        return VectorLaurent.from_json(value)
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise InputError(str(exc)) from exc


def _point(args, data) -> GrassmannPoint:
    try:
        n = args.n if args.n is not None else int(data["n"])
        M = args.M if args.M is not None else int(data["M"])
        N = args.N if args.N is not None else int(data["N"])
        gens = [VectorLaurent.from_json(g) for g in data.get("generators", [])]
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed point JSON: {exc}") from exc
    return make_point(n, M, N, gens)


def _parse(reader, value, what: str):
    try:
        return reader(value)
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise InputError(f"malformed {what}: {exc}") from exc


def _need(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required")
    return value


# -- handlers: each returns (json_payload, text) -------------------------------------


def pdo_cmd(args):
    data = _read_input(args)
    op = args.command
    if op == "mul":
        R = _operator(args, _field(data, "P")) @ _operator(args, _field(data, "Q"))
        return R.to_json(), str(R)
    if op == "adjoint":
        R = pdo_adjoint(_operator(args, _field(data, "P")))
        return R.to_json(), str(R)
    if op == "rho":
        mat = pdo_rho(_operator(args, _field(data, "P")))
        text = "\n".join("  ".join(str(s).replace("z", "D^-1") for s in row) for row in mat)
        return [[s.to_json() for s in row] for row in mat], text
    if op == "act":
        v = pdo_act(_operator(args, _field(data, "P")), _vector(_field(data, "f")))
        return v.to_json(), str(v)
    if op == "pair":
        q = pairing(_vector(_field(data, "f")), _vector(_field(data, "g")))
        return format_rational(q), str(q)
    raise InputError(f"unknown pdo command {op}")


def gr_cmd(args):
    op = args.command
    data = _read_input(args)
    if op == "make":
        W = _point(args, data)
        return W.to_json(), str(W)
    if op == "fredholm":
        fd = fredholm_data(_point(args, data))
        return fd.to_json(), repr(fd)
    if op == "perp":
        W = perp(_point(args, data))
        return W.to_json(), str(W)
    if op == "from-s":
        S = _operator(args, _field(data, "S"))
        W = from_dressing(S, _need(args.M, "--M"), _need(args.N, "--N"))
        return W.to_json(), str(W)
    if op == "to-s":
        S = to_dressing(_point(args, data))
        return S.to_json(), str(S)
    if op == "qeq":
        g = quotient_equal(_point(args, _field(data, "W1")), _point(args, _field(data, "W2")))
        payload = {"equal": g is not None, "gamma": None if g is None else g.to_json()}
        return payload, ("not equal in the quotient" if g is None else f"gamma = {g!r}")
    if op == "tangent":
        t = kp_tangent(_vector(_field(data, "a")), _point(args, _field(data, "W")))
        return t.to_json(), ("zero" if t.is_zero() else "\n".join(str(r) for r in t.rows))
    raise InputError(f"unknown gr command {op}")


def _times(args, data) -> FlowTimes:
    raw = data.get("times", {"t_cap": 1, "times": {}})
    ft = _parse(FlowTimes.from_json, raw, "flow times")
    if args.t_cap is not None:
        ft = FlowTimes(ft.times, args.t_cap)
    return ft


def kp_cmd(args):
    op = args.command
    data = _read_input(args)
    S = _operator(args, _field(data, "S"))
    if op == "dress":
        L = dress(S)
        return L.to_json(), str(L)
    if op == "vf":
        V = kp_vector_field(S, _need(args.i, "--i"), _need(args.j, "--j"))
        return V.to_json(), str(V)
    if op == "evolve":
        ft = _times(args, data)
        St, Y = evolve(S, ft)
        payload = {"S": St.to_json(), "Y": Y.to_json(), "S_at_t": St.evaluate(ft.times).to_json()}
        return payload, f"S(t) = {St.evaluate(ft.times)}\nY(t) = {Y.evaluate(ft.times)}"
    if op == "sp-check":
        m = args.m if args.m is not None else S.n // 2
        cert = sp_check(S, m)
        if not cert.ok:
            raise CheckFailed(cert.to_json(), f"not on the Sp locus: {cert!r}")
        return cert.to_json(), repr(cert)
    if op == "sp-evolve":
        m = args.m if args.m is not None else S.n // 2
        ft = _times(args, data)
        St = sp_evolve(S, ft, m)
        zero = sp_residual_series(St).is_zero()
        payload = {"S": St.to_json(), "residual_zero": zero}
        if not zero:
            raise CheckFailed(payload, "Sp residual does not vanish")
        return payload, f"S(t) = {St.evaluate(ft.times)}\nresidual vanishes through t^{ft.t_cap}"
    raise InputError(f"unknown kp command {op}")


def spec_cmd(args):
    op = args.command
    if op == "numerology":
        rec = numerology(_need(args.n, "--n"), _need(args.g, "--g"), args.d or 0, args.m)
        js = rec.to_json()
        return js, "\n".join(f"{k:22s} {v}" for k, v in js.items())
    data = _read_input(args)
    if op == "hitchin":
        s = hitchin_map(_parse(HiggsMatrix.from_json, data, "Higgs matrix"))
        return s.to_json(), repr(s)
    s = _parse(HitchinPoint.from_json, data, "Hitchin point")
    if op == "scale":
        lam = _parse(lambda v: parse_rational(v) if isinstance(v, str) else Fraction(v),
                     _field(data, "lambda"), "lambda")
        r = weighted_scale(lam, s)
        return r.to_json(), repr(r)
    if op == "dual":
        r = serre_dual_point(s)
        return r.to_json(), repr(r)
    if op == "sp":
        member = sp_membership(s)
        return {"member": member}, str(member).lower()
    if op == "resultant":
        r = ramification_resultant(s)
        return r.to_json(), str(r)
    if op == "hensel":
        prec = args.prec if args.prec is not None else int(data.get("prec", 10))
        branches = hensel_split(s, prec, allow_sqrt=args.sqrt)
        payload = {"prec": prec, "branches": [[c.to_json() for c in b] for b in branches]}
        text = "\n".join(" + ".join(f"({c!r})*z^{k}" for k, c in enumerate(b) if c) + f" + O(z^{prec})"
                         for b in branches)
        return payload, text
    raise InputError(f"unknown spec command {op}")


def verify_cmd(args):
    params = dict(seed=args.seed, count=args.count, n=args.n, M=args.M, N=args.N)
    if args.m is not None:
        params["m"] = args.m
    results = run_suite(args.suite, **params)
    payload = {"suite": args.suite, "seed": args.seed, "passed": all(r.passed for r in results),
               "properties": [r.to_json() for r in results]}
    text = "\n".join(r.line(timing=False) for r in results)
    if not payload["passed"]:
        raise CheckFailed(payload, text)
    return payload, text


# -- parser ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, help="matrix size / number of components")
    p.add_argument("--m", type=int, help="half size for the symplectic reduction (n = 2m)")
    p.add_argument("--M", type=int, help="pole depth of the Grassmannian window")
    p.add_argument("--N", type=int, help="height of the Grassmannian window")
    p.add_argument("--x-cap", dest="x_cap", type=int, help="reject operators with larger x-degree")
    p.add_argument("--order-lo", dest="order_lo", type=int, help="truncation floor applied to input operators")
    p.add_argument("--t-cap", dest="t_cap", type=int, help="total degree cap for flow-time expansions")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized drivers")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--in", dest="input", metavar="FILE", help="read input JSON from FILE (default stdin)")
    p.add_argument("--out", dest="output", metavar="FILE", help="write the report to FILE (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hitchin-kp", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name, commands, handler, extra=None):
        g = groups.add_parser(name)
        sub = g.add_subparsers(dest="command", required=True)
        for c in commands:
            p = sub.add_parser(c)
            _common(p)
            if extra:
                extra(p)
            p.set_defaults(handler=handler)

    def kp_extra(p):
        p.add_argument("--i", type=int, help="flow component (from 1)")
        p.add_argument("--j", type=int, help="flow power")

    def spec_extra(p):
        p.add_argument("--g", type=int, help="genus")
        p.add_argument("--d", type=int, help="degree")
        p.add_argument("--prec", type=int, help="z-precision for hensel")
        p.add_argument("--sqrt", action="store_true", help="allow one square root in hensel branches")

    group("pdo", ["mul", "adjoint", "rho", "act", "pair"], pdo_cmd)
    group("gr", ["make", "fredholm", "perp", "from-s", "to-s", "qeq", "tangent"], gr_cmd)
    group("kp", ["dress", "vf", "evolve", "sp-check", "sp-evolve"], kp_cmd, kp_extra)
    group("spec", ["hitchin", "scale", "dual", "sp", "resultant", "hensel", "numerology"], spec_cmd, spec_extra)

    v = groups.add_parser("verify")
    v.add_argument("suite", choices=sorted(SUITES))
    _common(v)
    v.add_argument("--count", type=int, help="population size (default: the acceptance scale)")
    v.set_defaults(handler=verify_cmd, command=None)
    return parser


def _emit(args, payload: Any, text: str):
    out = text if args.format == "text" else json.dumps(payload, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        sys.stdout.write(out + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload, text = args.handler(args)
    except CheckFailed as exc:
        _emit(args, exc.payload, exc.text)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(args, payload, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
