"""Truncated expansions about the diagonal, sum_m c_m(x) h^m with h = x - y."""
from __future__ import annotations

from fractions import Fraction
from typing import Any, Sequence

import gmpy2

from .poly import Rat
from .ratfunc import RatFunc


def _min_order(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class DiagJet:
    """Jet of a function of (x, y) in powers of h = x - y.

    ``order`` is the number of leading coefficients known exactly; ``None``
    means the expansion is exact (a polynomial in h, all higher terms vanish).
    Coefficients beyond ``order`` are never stored.
    """

    __slots__ = ("coeffs", "order", "zero")

    def __init__(self, coeffs: Sequence[Any], order: int | None, zero: Any):
        coeffs = list(coeffs)
        if order is not None:
            if order < 0:
                order = 0
            coeffs = coeffs[:order]
        while coeffs and not coeffs[-1] and order is None:
            coeffs.pop()
        self.coeffs = coeffs
        self.order = order
        self.zero = zero

    @classmethod
    def constant(cls, value: Any, zero: Any) -> "DiagJet":
        return cls([value], None, zero)

    def __getitem__(self, m: int) -> Any:
        if self.order is not None and m >= self.order:
            raise IndexError(f"jet coefficient h^{m} not known (order {self.order})")
        return self.coeffs[m] if m < len(self.coeffs) else self.zero

    def known(self, m: int) -> bool:
        return self.order is None or m < self.order

    def __add__(self, other: "DiagJet") -> "DiagJet":
        order = _min_order(self.order, other.order)
        n = max(len(self.coeffs), len(other.coeffs))
        if order is not None:
            n = min(n, order)
        return DiagJet([self._get(i) + other._get(i) for i in range(n)], order, self.zero)

    def __neg__(self) -> "DiagJet":
        return DiagJet([-c for c in self.coeffs], self.order, self.zero)

    def __sub__(self, other: "DiagJet") -> "DiagJet":
        return self + (-other)

    def __mul__(self, other) -> "DiagJet":
        if not isinstance(other, DiagJet):
            return DiagJet([c * other for c in self.coeffs], self.order, self.zero)
        order = _min_order(self.order, other.order)
        n = len(self.coeffs) + len(other.coeffs) - 1
        if order is not None:
            n = min(n, order)
        out = []
        for m in range(max(n, 0)):
            acc = self.zero
            for i in range(max(0, m - len(other.coeffs) + 1), min(m, len(self.coeffs) - 1) + 1):
                acc = acc + self.coeffs[i] * other.coeffs[m - i]
            out.append(acc)
        return DiagJet(out, order, self.zero)

    __rmul__ = __mul__

    def _get(self, m: int) -> Any:
        return self.coeffs[m] if m < len(self.coeffs) else self.zero

    def dx(self, times: int = 1) -> "DiagJet":
        """x-derivative at fixed y: (dJ)_m = c_m' + (m+1) c_{m+1}."""
        out = self
        for _ in range(times):
            order = None if out.order is None else out.order - 1
            n = len(out.coeffs) if order is None else min(len(out.coeffs), order)
            coeffs = [out._get(m).diff("x") + out._get(m + 1) * (m + 1) for m in range(n)]
            out = DiagJet(coeffs, order, out.zero)
        return out

    def times_h(self, power: int = 1) -> "DiagJet":
        order = None if self.order is None else self.order + power
        return DiagJet([self.zero] * power + self.coeffs, order, self.zero)

    def diagonal(self) -> Any:
        return self[0]

    def x_derivative_on_diagonal(self, j: int) -> Any:
        """d^j/dx^j H(x, y) at y = x, i.e. sum_i binom(j, i) i! c_i^(j-i)."""
        total = self.zero
        binom = 1
        fact = 1
        for i in range(j + 1):
            if i:
                binom = binom * (j - i + 1) // i
                fact *= i
            total = total + self[i].diff("x", j - i) * (binom * fact)
        return total

    def swapped(self) -> "DiagJet":
        """Jet of H(y, x): coefficient m is (-1)^m sum_{i+l=m} c_l^(i) / i!."""
        n = len(self.coeffs) if self.order is None else self.order
        if self.order is None and self.coeffs:
            raise ValueError("swapping an exact jet needs a finite order")
        out = []
        for m in range(n):
            acc = self.zero
            fact = 1
            for i in range(m + 1):
                if i:
                    fact *= i
                c = self._get(m - i)
                if c:
                    acc = acc + c.diff("x", i) * gmpy2.mpq(1, fact)
            out.append(-acc if m % 2 else acc)
        return DiagJet(out, self.order, self.zero)

    def map(self, f) -> "DiagJet":
        return DiagJet([f(c) for c in self.coeffs], self.order, f(self.zero))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiagJet):
            return NotImplemented
        if self.order != other.order:
            return False
        n = max(len(self.coeffs), len(other.coeffs))
        return all(self._get(i) == other._get(i) for i in range(n))

    def agrees_with(self, other: "DiagJet", upto: int | None = None) -> bool:
        """Coefficient equality on the range both jets know (optionally capped)."""
        order = _min_order(self.order, other.order)
        n = max(len(self.coeffs), len(other.coeffs)) if order is None else order
        if upto is not None:
            n = min(n, upto)
        return all(self._get(i) == other._get(i) for i in range(n))

    def __repr__(self) -> str:
        body = ", ".join(str(c) for c in self.coeffs)
        return f"DiagJet([{body}], order={self.order})"


def taylor_at_diagonal(f: RatFunc, order: int) -> DiagJet:
    """Expand f(x, y) at y = x: c_m = (-1)^m / m! * d^m f/dy^m |_{y=x}."""
    from .ratfunc import X

    coeffs = []
    g = f
    fact = 1
    for m in range(order):
        if m:
            g = g.diff("y")
            fact *= m
        c = g.compose("y", X) if "y" in g.variables() else g
        coeffs.append(c * gmpy2.mpq((-1) ** m, fact))
    return DiagJet(coeffs, order, RatFunc())


def as_rat(v) -> "gmpy2.mpq":
    if isinstance(v, Rat):
        return v
    if isinstance(v, Fraction):
        return gmpy2.mpq(v.numerator, v.denominator)
    return gmpy2.mpq(v)
