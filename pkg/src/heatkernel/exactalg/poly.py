"""Sparse multivariate polynomials over Q in a fixed global variable order.

All polynomials in the package live in one ring, ``Q[x, y, s1, ..., s6, h]``,
backed by sympy's sparse ``PolyElement`` (dict of exponent tuples to gmpy2
rationals).  This module only adds the pieces sympy does not give us in the
form we need: canonical text rendering, parsing of user input, variable swaps
and float evaluation.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import gmpy2
import sympy
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, ring

VARIABLES: tuple[str, ...] = ("x", "y", "s1", "s2", "s3", "s4", "s5", "s6", "h")
MAX_TIMES = 6

R, *_GENS = ring(",".join(VARIABLES), QQ)
GENS: dict[str, PolyElement] = dict(zip(VARIABLES, _GENS))
INDEX: dict[str, int] = {name: i for i, name in enumerate(VARIABLES)}

MPoly = PolyElement
Rat = type(gmpy2.mpq())


def rat(value) -> "gmpy2.mpq":
    """Coerce int, Fraction, mpq or a ``"p/q"`` literal to an exact rational."""
    if isinstance(value, Rat):
        return value
    if isinstance(value, Fraction):
        return gmpy2.mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return gmpy2.mpq(Fraction(value.strip()))
    if isinstance(value, int):
        return gmpy2.mpq(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def var(name: str) -> MPoly:
    try:
        return GENS[name]
    except KeyError:
        raise KeyError(f"unknown variable {name!r}; allowed: {', '.join(VARIABLES)}") from None


def const(value) -> MPoly:
    return R(rat(value))


def parse_poly(text: str) -> MPoly:
    """Parse a polynomial such as ``"s1^2/2 + s2"`` into the global ring."""
    expr = _sympify(text)
    if not expr.is_polynomial(*_SYMBOLS.values()):
        raise ValueError(f"not a polynomial: {text!r}")
    return R.from_expr(sympy.expand(expr))


def parse_rational_function(text: str) -> tuple[MPoly, MPoly]:
    expr = sympy.together(_sympify(text))
    num, den = sympy.fraction(expr)
    return R.from_expr(sympy.expand(num)), R.from_expr(sympy.expand(den))


_SYMBOLS = {name: sympy.Symbol(name) for name in VARIABLES}


def _sympify(text: str) -> sympy.Expr:
    cleaned = text.replace("^", "**")
    try:
        expr = sympy.parse_expr(cleaned, local_dict=dict(_SYMBOLS), evaluate=True)
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise ValueError(f"cannot parse {text!r}: {exc}") from None
    unknown = expr.free_symbols - set(_SYMBOLS.values())
    if unknown:
        raise ValueError(f"unknown symbols {sorted(map(str, unknown))} in {text!r}")
    return expr


def _format_rat(c) -> str:
    c = rat(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _monomial_text(exps: tuple[int, ...]) -> str:
    parts = []
    for name, e in zip(VARIABLES, exps):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def sorted_terms(p: MPoly) -> list[tuple[tuple[int, ...], "gmpy2.mpq"]]:
    """Terms by total degree descending, ties broken lexicographically."""
    return sorted(p.items(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))


def render_poly(p: MPoly) -> str:
    if not p:
        return "0"
    out: list[str] = []
    for exps, c in sorted_terms(p):
        mono = _monomial_text(exps)
        neg = c < 0
        mag = -c if neg else c
        if not mono:
            body = _format_rat(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_rat(mag)}*{mono}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def swap_variables(p: MPoly, a: str, b: str) -> MPoly:
    ia, ib = INDEX[a], INDEX[b]
    terms = {}
    for exps, c in p.items():
        e = list(exps)
        e[ia], e[ib] = e[ib], e[ia]
        terms[tuple(e)] = c
    return R(terms)


def rename_variable(p: MPoly, src: str, dst: str) -> MPoly:
    """Replace variable ``src`` by ``dst`` (``dst`` must not occur in ``p``)."""
    isrc, idst = INDEX[src], INDEX[dst]
    terms = {}
    for exps, c in p.items():
        if exps[idst]:
            raise ValueError(f"{dst} already occurs in polynomial")
        e = list(exps)
        e[idst], e[isrc] = e[isrc], 0
        terms[tuple(e)] = c
    return R(terms)


def substitute(p: MPoly, bindings: Mapping[str, object]) -> MPoly:
    """Substitute polynomials (or rationals) for variables, simultaneously."""
    if not bindings:
        return p
    pairs = []
    for name, value in bindings.items():
        if isinstance(value, PolyElement):
            pairs.append((var(name), value))
        else:
            pairs.append((var(name), const(value)))
    return p.compose(pairs)


def degree_in(p: MPoly, names: Iterable[str]) -> int:
    """Total degree of ``p`` counting only the listed variables (-1 for zero)."""
    idx = [INDEX[n] for n in names]
    if not p:
        return -1
    return max(sum(exps[i] for i in idx) for exps in p.keys())


def used_variables(p: MPoly) -> set[str]:
    used = set()
    for exps in p.keys():
        for name, e in zip(VARIABLES, exps):
            if e:
                used.add(name)
    return used


def evaluate_float(p: MPoly, point: Mapping[str, float]) -> float:
    total = 0.0
    for exps, c in p.items():
        term = float(c)
        for name, e in zip(VARIABLES, exps):
            if e:
                term *= point[name] ** e
        total += term
    return total
