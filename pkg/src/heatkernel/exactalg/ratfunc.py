"""Reduced quotients of polynomials over Q."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping, Sequence

import gmpy2

from . import poly as P
from .poly import MPoly, R, Rat


def _normalize(num: MPoly, den: MPoly) -> tuple[MPoly, MPoly]:
    if not den:
        raise ZeroDivisionError("rational function with zero denominator")
    if not num:
        return R.zero, R.one
    if den.is_ground:
        return num.quo_ground(den.LC), R.one
    num, den = num.cancel(den)
    # den -> primitive integer polynomial with positive lex-leading coefficient
    content, prim = den.primitive()
    if prim.LC < 0:
        content, prim = -content, -prim
    if content != 1:
        num = num.quo_ground(content)
    return num, prim


class RatFunc:
    """Exact rational function ``num/den`` kept in a unique reduced form.

    The denominator is a primitive integer polynomial whose lex-leading
    coefficient is positive and ``gcd(num, den) = 1``, so two values are equal
    iff their numerators and denominators are identical.

    Arithmetic accepts ints, ``Fraction`` and ``gmpy2.mpq`` on either side.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: MPoly | int | Fraction | str = 0, den: MPoly | int | None = None,
                 *, reduced: bool = False):
        if isinstance(num, str):
            if den is not None:
                raise TypeError("string input carries its own denominator")
            num, den = P.parse_rational_function(num)
        num = _as_poly(num)
        den = R.one if den is None else _as_poly(den)
        if not reduced:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def variable(cls, name: str) -> "RatFunc":
        return cls(P.var(name), reduced=True)

    @classmethod
    def constant(cls, value) -> "RatFunc":
        return cls(R(P.rat(value)), reduced=True)

    # -- predicates -----------------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.num)

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_ground

    def constant_value(self) -> "gmpy2.mpq":
        if not self.is_constant:
            raise ValueError(f"{self} is not a constant")
        return self.num.LC if self.num else gmpy2.mpq(0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatFunc):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.num.items())), tuple(sorted(self.den.items()))))
        return self._hash

    # -- arithmetic -----------------------------------------------------------------
    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den, reduced=True)

    def __add__(self, other) -> "RatFunc":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        if other.den.is_ground:
            return RatFunc(self.num + other.num * self.den, self.den, reduced=True)
        if self.den.is_ground:
            return RatFunc(self.num * other.den + other.num, other.den, reduced=True)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other) -> "RatFunc":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "RatFunc":
        return (-self) + other

    def __mul__(self, other) -> "RatFunc":
        if isinstance(other, (int, Rat, Fraction)):
            c = P.rat(other)
            if c == 0:
                return RatFunc()
            return RatFunc(self.num.mul_ground(c), self.den, reduced=True)
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.num or not other.num:
            return RatFunc()
        if self.den.is_ground and other.den.is_ground:
            return RatFunc(self.num * other.num, R.one, reduced=True)
        # cross-cancel keeps intermediate sizes down
        a, d2 = self.num.cancel(other.den) if not other.den.is_ground else (self.num, other.den)
        b, d1 = other.num.cancel(self.den) if not self.den.is_ground else (other.num, self.den)
        return RatFunc(a * b, d1 * d2)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if not self.num:
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other) -> "RatFunc":
        if isinstance(other, (int, Rat, Fraction)):
            c = P.rat(other)
            if c == 0:
                raise ZeroDivisionError("division by zero rational function")
            return RatFunc(self.num.quo_ground(c), self.den, reduced=True)
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> "RatFunc":
        return _coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "RatFunc":
        if n < 0:
            return self.inverse() ** (-n)
        return RatFunc(self.num ** n, self.den ** n, reduced=True)

    # -- calculus & substitution ---------------------------------------------------
    def diff(self, name: str = "x", times: int = 1) -> "RatFunc":
        out = self
        v = P.var(name)
        for _ in range(times):
            if not out.num:
                break
            if out.den.is_ground:
                out = RatFunc(out.num.diff(v), R.one, reduced=True)
            else:
                n, d = out.num, out.den
                out = RatFunc(n.diff(v) * d - n * d.diff(v), d * d)
        return out

    def subs(self, bindings: Mapping[str, object]) -> "RatFunc":
        """Simultaneously substitute polynomials / rationals for variables."""
        num = P.substitute(self.num, bindings)
        den = P.substitute(self.den, bindings)
        if not den:
            raise ZeroDivisionError(f"substitution {dict(bindings)} makes the denominator vanish")
        return RatFunc(num, den)

    def compose(self, name: str, value: "RatFunc") -> "RatFunc":
        """Substitute a rational function for one variable."""
        if value.is_polynomial:
            return self.subs({name: value.num.quo_ground(value.den.LC)})
        num = _compose_poly(self.num, name, value)
        den = _compose_poly(self.den, name, value)
        return num / den

    def swap(self, a: str = "x", b: str = "y") -> "RatFunc":
        return RatFunc(P.swap_variables(self.num, a, b), P.swap_variables(self.den, a, b))

    def rename(self, src: str, dst: str) -> "RatFunc":
        return RatFunc(P.rename_variable(self.num, src, dst), P.rename_variable(self.den, src, dst),
                       reduced=True)

    def variables(self) -> set[str]:
        return P.used_variables(self.num) | P.used_variables(self.den)

    def degree(self, names: Sequence[str] = ("x",)) -> int:
        """Numerator degree minus denominator degree in the given variables."""
        return P.degree_in(self.num, names) - P.degree_in(self.den, names)

    def vanishes_at_infinity(self, name: str = "x") -> bool:
        return not self.num or self.degree((name,)) < 0

    def evaluate(self, point: Mapping[str, float]) -> float:
        return P.evaluate_float(self.num, point) / P.evaluate_float(self.den, point)

    def to_callable(self, names: Sequence[str] = ("x",)) -> Callable[..., float]:
        """Compile to a float function of the given variables (others must be absent)."""
        extra = self.variables() - set(names)
        if extra:
            raise ValueError(f"unbound variables {sorted(extra)} in {self}")
        idx = [P.INDEX[n] for n in names]
        nterms = [(float(c), [e[i] for i in idx]) for e, c in self.num.items()]
        dterms = [(float(c), [e[i] for i in idx]) for e, c in self.den.items()]

        def f(*args: float) -> float:
            n = sum(c * _prod(args, e) for c, e in nterms)
            d = sum(c * _prod(args, e) for c, e in dterms)
            return n / d

        return f

    # -- text -----------------------------------------------------------------------
    def __str__(self) -> str:
        return f"({P.render_poly(self.num)})/({P.render_poly(self.den)})"

    def __repr__(self) -> str:
        return f"RatFunc('{self}')"


def _prod(args, exps) -> float:
    out = 1.0
    for a, e in zip(args, exps):
        if e:
            out *= a ** e
    return out


def _as_poly(value) -> MPoly:
    if isinstance(value, P.PolyElement):
        return value
    if isinstance(value, (int, Rat, Fraction)):
        return R(P.rat(value))
    raise TypeError(f"cannot build a polynomial from {type(value).__name__}")


def _coerce(value) -> RatFunc:
    if isinstance(value, RatFunc):
        return value
    if isinstance(value, (int, Rat, Fraction)):
        return RatFunc.constant(value)
    if isinstance(value, P.PolyElement):
        return RatFunc(value, reduced=True)
    return NotImplemented


def _compose_poly(p: MPoly, name: str, value: RatFunc) -> RatFunc:
    """Horner evaluation of ``p`` as a polynomial in ``name`` at ``value``."""
    i = P.INDEX[name]
    by_power: dict[int, dict] = {}
    for exps, c in p.items():
        e = list(exps)
        k = e[i]
        e[i] = 0
        by_power.setdefault(k, {})[tuple(e)] = c
    out = RatFunc()
    for k in range(max(by_power, default=0), -1, -1):
        out = out * value
        if k in by_power:
            out = out + RatFunc(R(by_power[k]), reduced=True)
    return out


ZERO = RatFunc()
ONE = RatFunc(1)
X = RatFunc.variable("x")
Y = RatFunc.variable("y")
