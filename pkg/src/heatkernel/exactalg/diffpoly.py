"""Differential polynomials in the generators u_j^(m).

A monomial is a sorted tuple of generator codes ``m * STRIDE + j`` (a multiset,
repeated codes are powers), so multiplying monomials is just merging tuples
and the derivation shifts one code by ``STRIDE`` at a time.
"""
from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import gmpy2

from . import poly as P
from .poly import Rat
from .ratfunc import RatFunc

STRIDE = 64  # at most 64 generator families u_0..u_63

Monomial = tuple[int, ...]


def code(j: int, m: int = 0) -> int:
    return m * STRIDE + j


def family(g: int) -> int:
    return g % STRIDE


def order_of(g: int) -> int:
    return g // STRIDE


def _gen_text(g: int) -> str:
    j, m = family(g), order_of(g)
    if m <= 3:
        return f"u{j}" + "'" * m
    return f"u{j}^({m})"


class DiffPoly:
    """Polynomial in u_j^(m) with exact rational coefficients.

    Examples
    --------
    >>> u0 = DiffPoly.gen(0)
    >>> str((u0 * u0).derive())
    "2*u0*u0'"
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, "gmpy2.mpq"] | None = None, *, clean: bool = False):
        if terms is None:
            self.terms: dict[Monomial, Rat] = {}
        elif clean:
            self.terms = dict(terms)
        else:
            self.terms = {m: P.rat(c) for m, c in terms.items() if c}
        self._hash = None

    @classmethod
    def gen(cls, j: int, m: int = 0) -> "DiffPoly":
        if not 0 <= j < STRIDE or m < 0:
            raise ValueError(f"bad generator u{j}^({m})")
        return cls({(code(j, m),): gmpy2.mpq(1)}, clean=True)

    @classmethod
    def constant(cls, value) -> "DiffPoly":
        c = P.rat(value)
        return cls({(): c}, clean=True) if c else cls()

    # -- queries -------------------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> "gmpy2.mpq":
        if not self.is_constant:
            raise ValueError(f"{self} is not a constant")
        return self.terms.get((), gmpy2.mpq(0))

    def constant_term(self) -> "gmpy2.mpq":
        return self.terms.get((), gmpy2.mpq(0))

    def generators(self) -> set[int]:
        return {g for mono in self.terms for g in mono}

    def families(self) -> set[int]:
        return {family(g) for g in self.generators()}

    def max_order(self) -> int:
        return max((order_of(g) for g in self.generators()), default=-1)

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Rat, Fraction)):
            return self.terms == DiffPoly.constant(other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- arithmetic ----------------------------------------------------------------
    def __neg__(self) -> "DiffPoly":
        return DiffPoly({m: -c for m, c in self.terms.items()}, clean=True)

    def __add__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return DiffPoly(out, clean=True)

    __radd__ = __add__

    def __sub__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "DiffPoly":
        return (-self) + other

    def __mul__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Rat, Fraction)):
            c = P.rat(other)
            if not c:
                return DiffPoly()
            return DiffPoly({m: v * c for m, v in self.terms.items()}, clean=True)
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, Rat] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                key = m2 if not m1 else m1 if not m2 else tuple(sorted(m1 + m2))
                v = out.get(key)
                out[key] = c1 * c2 if v is None else v + c1 * c2
        return DiffPoly({m: c for m, c in out.items() if c}, clean=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            other = other.constant_value()
        c = P.rat(other)
        if not c:
            raise ZeroDivisionError("division of a differential polynomial by zero")
        return self * (1 / c)

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative power of a differential polynomial")
        out = DiffPoly.constant(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- derivation ------------------------------------------------------------------
    def derive(self, times: int = 1) -> "DiffPoly":
        if times < 0:
            raise ValueError("times must be >= 0")
        out = self
        for _ in range(times):
            out = out._derive_once()
        return out

    def diff(self, name: str = "x", times: int = 1) -> "DiffPoly":
        """Alias of :meth:`derive` so DiffPoly and RatFunc share one interface."""
        if name != "x":
            raise ValueError("differential polynomials only depend on x")
        return self.derive(times)

    def _derive_once(self) -> "DiffPoly":
        out: dict[Monomial, Rat] = {}
        for mono, c in self.terms.items():
            counts = Counter(mono)
            for g, mult in counts.items():
                lst = list(mono)
                lst.remove(g)
                lst.append(g + STRIDE)
                key = tuple(sorted(lst))
                add = c * mult
                v = out.get(key)
                out[key] = add if v is None else v + add
        return DiffPoly({m: c for m, c in out.items() if c}, clean=True)

    def partial(self, g: int) -> "DiffPoly":
        """Partial derivative with respect to the generator with code ``g``."""
        out: dict[Monomial, Rat] = {}
        for mono, c in self.terms.items():
            mult = mono.count(g)
            if not mult:
                continue
            lst = list(mono)
            lst.remove(g)
            key = tuple(lst)
            v = out.get(key)
            out[key] = c * mult if v is None else v + c * mult
        return DiffPoly({m: c for m, c in out.items() if c}, clean=True)

    def euler(self, j: int) -> "DiffPoly":
        """Variational derivative sum_m (-D)^m (dp/du_j^(m))."""
        out = DiffPoly()
        top = max((order_of(g) for g in self.generators() if family(g) == j), default=-1)
        for m in range(top + 1):
            part = self.partial(code(j, m))
            if part:
                term = part.derive(m)
                out = out - term if m % 2 else out + term
        return out

    def flow(self, rhs: Mapping[int, "DiffPoly"]) -> "DiffPoly":
        """Chain rule: d/ds of ``self`` when u_j evolves by ``rhs[j]``."""
        out = DiffPoly()
        cache: dict[int, DiffPoly] = {}
        for g in sorted(self.generators()):
            j, m = family(g), order_of(g)
            if j not in rhs:
                raise KeyError(f"no flow given for u{j}")
            dg = cache.get(g)
            if dg is None:
                dg = cache[g] = rhs[j].derive(m)
            out = out + self.partial(g) * dg
        return out

    def substitute(self, bindings: Mapping[int, RatFunc] | Callable[[int, int], RatFunc]) -> RatFunc:
        """Replace u_j^(m) by the m-th x-derivative of ``bindings[j]``."""
        if callable(bindings):
            value_of = bindings
        else:
            value_of = _DerivativeCache(bindings)
        result = RatFunc()
        for mono, c in self.terms.items():
            term = RatFunc.constant(c)
            for g in mono:
                term = term * value_of(family(g), order_of(g))
            result = result + term
        return result

    def compose(self, bindings: Mapping[int, "DiffPoly"]) -> "DiffPoly":
        """Replace u_j^(m) by the m-th derivative of ``bindings[j]`` (unbound u_j are kept)."""
        cache: dict[int, DiffPoly] = {}

        def value(g: int) -> DiffPoly:
            if g not in cache:
                j, m = family(g), order_of(g)
                cache[g] = bindings[j].derive(m) if j in bindings else DiffPoly.gen(j, m)
            return cache[g]

        out = DiffPoly()
        for mono, c in self.terms.items():
            term = DiffPoly.constant(c)
            for g in mono:
                term = term * value(g)
            out = out + term
        return out

    def map_coefficients(self, f: Callable[[Rat], Rat]) -> "DiffPoly":
        return DiffPoly({m: f(c) for m, c in self.terms.items()})

    # -- text -------------------------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Monomial, Rat]]:
        def key(item):
            mono = item[0]
            total = sum(order_of(g) for g in mono)
            return (-total, -len(mono), tuple(-g for g in reversed(mono)))
        return sorted(self.terms.items(), key=key)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for mono, c in self.sorted_terms():
            body = _monomial_text(mono)
            neg = c < 0
            mag = -c if neg else c
            if not body:
                text = P._format_rat(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{P._format_rat(mag)}*{body}"
            if not parts:
                parts.append(f"-{text}" if neg else text)
            else:
                parts.append(f" - {text}" if neg else f" + {text}")
        return "".join(parts)

    def __repr__(self) -> str:
        return f"DiffPoly('{self}')"


def _monomial_text(mono: Monomial) -> str:
    counts = Counter(mono)
    out = []
    for g in sorted(counts, key=lambda g: (family(g), order_of(g))):
        e = counts[g]
        name = _gen_text(g)
        if e == 1:
            out.append(name)
        elif order_of(g) >= 4:
            out.append(f"({name})^{e}")
        else:
            out.append(f"{name}^{e}")
    return "*".join(out)


def _coerce(value) -> DiffPoly:
    if isinstance(value, DiffPoly):
        return value
    if isinstance(value, (int, Rat, Fraction)):
        return DiffPoly.constant(value)
    return NotImplemented


class _DerivativeCache:
    def __init__(self, bindings: Mapping[int, RatFunc]):
        self.bindings = bindings
        self.cache: dict[tuple[int, int], RatFunc] = {}

    def __call__(self, j: int, m: int) -> RatFunc:
        hit = self.cache.get((j, m))
        if hit is not None:
            return hit
        if j not in self.bindings:
            raise KeyError(f"unbound generator u{j}")
        if m == 0:
            val = self.bindings[j]
            if not isinstance(val, RatFunc):
                val = RatFunc(val)
        else:
            val = self(j, m - 1).diff("x")
        self.cache[(j, m)] = val
        return val


def generic_operator_coeffs(N: int) -> list[DiffPoly]:
    """Symbolic coefficients u_0..u_{N-2} as DiffPoly generators."""
    return [DiffPoly.gen(j) for j in range(N - 1)]


def total_derivative_test(p: DiffPoly, fams: Iterable[int] | None = None) -> bool:
    """True iff ``p`` is a total x-derivative (all Euler operators vanish)."""
    if p.constant_term():
        return False
    fams = p.families() if fams is None else fams
    return all(not p.euler(j) for j in fams)
