"""Formal pseudo-differential operators sum_i a_i D^i over a differential ring.

Operators carry a precision floor: every coefficient of degree >= floor is
exact, anything below is unknown and never stored.  ``floor=None`` means the
operator is known exactly (a finite sum).  Products, roots and inverses take an
optional requested floor and compute exactly down to it.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Any, Iterator, Mapping

from .exactalg.diffpoly import DiffPoly
from .exactalg.ratfunc import RatFunc

# Cap on derivatives tried when an infinite Leibniz series must terminate.
MAX_LEIBNIZ_TERMS = 64


class Ring:
    """Coefficient ring with a derivation."""

    name = "ring"

    def zero(self) -> Any:
        raise NotImplementedError

    def one(self) -> Any:
        raise NotImplementedError

    def derive(self, a: Any) -> Any:
        raise NotImplementedError

    def coerce(self, value: Any) -> Any:
        raise NotImplementedError

    def is_unit(self, a: Any) -> bool:
        raise NotImplementedError

    def inverse(self, a: Any) -> Any:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))


class RatFuncRing(Ring):
    """Rational functions with D acting as d/d``var`` (other variables are constants)."""

    def __init__(self, var: str = "x"):
        self.var = var
        self.name = f"Q({var},...)"

    def zero(self) -> RatFunc:
        return RatFunc()

    def one(self) -> RatFunc:
        return RatFunc(1)

    def derive(self, a: RatFunc) -> RatFunc:
        return a.diff(self.var)

    def coerce(self, value) -> RatFunc:
        if isinstance(value, RatFunc):
            return value
        if isinstance(value, str):
            return RatFunc(value)
        return RatFunc.constant(value)

    def is_unit(self, a: RatFunc) -> bool:
        return bool(a)

    def inverse(self, a: RatFunc) -> RatFunc:
        return a.inverse()


class DiffPolyRing(Ring):
    """Differential polynomials in u_j^(m); only nonzero constants are units."""

    name = "Q{u}"

    def zero(self) -> DiffPoly:
        return DiffPoly()

    def one(self) -> DiffPoly:
        return DiffPoly.constant(1)

    def derive(self, a: DiffPoly) -> DiffPoly:
        return a.derive()

    def coerce(self, value) -> DiffPoly:
        if isinstance(value, DiffPoly):
            return value
        return DiffPoly.constant(value)

    def is_unit(self, a: DiffPoly) -> bool:
        return bool(a) and a.is_constant

    def inverse(self, a: DiffPoly) -> DiffPoly:
        if not self.is_unit(a):
            raise ValueError(f"{a} is not invertible")
        return DiffPoly.constant(1 / a.constant_value())


X_RING = RatFuncRing("x")
H_RING = RatFuncRing("h")
DP_RING = DiffPolyRing()


@lru_cache(maxsize=None)
def binom(k: int, i: int) -> int:
    """Generalized binomial k(k-1)...(k-i+1)/i! for any integer k."""
    if i < 0:
        return 0
    num = 1
    for t in range(i):
        num *= k - t
    den = 1
    for t in range(2, i + 1):
        den *= t
    return num // den


def _max_floor(*floors: int | None) -> int | None:
    known = [f for f in floors if f is not None]
    return max(known) if known else None


class _Derivatives:
    """Lazily cached iterated derivatives of one coefficient."""

    __slots__ = ("ring", "values", "dead")

    def __init__(self, ring: Ring, a: Any):
        self.ring = ring
        self.values = [a]
        self.dead = not a

    def get(self, n: int) -> Any:
        while len(self.values) <= n:
            if self.dead:
                return self.values[-1]
            nxt = self.ring.derive(self.values[-1])
            if not nxt:
                self.dead = True
            self.values.append(nxt)
        return self.values[n]

    def terminates_within(self, n: int) -> int | None:
        """Index of the first vanishing derivative if it occurs by step ``n``."""
        for i in range(n + 1):
            if not self.get(i):
                return i
        return None


class Pdo:
    """A (possibly truncated) pseudo-differential operator.

    Parameters
    ----------
    coeffs : mapping degree -> ring element (zeros are dropped)
    ring : coefficient ring
    floor : precision floor, or None when the operator is exact
    """

    __slots__ = ("coeffs", "ring", "floor")

    def __init__(self, coeffs: Mapping[int, Any], ring: Ring, floor: int | None = None):
        self.ring = ring
        self.floor = floor
        self.coeffs = {
            int(d): c for d, c in coeffs.items()
            if c and (floor is None or d >= floor)
        }

    # -- constructors -------------------------------------------------------------------
    @classmethod
    def D(cls, k: int, ring: Ring) -> "Pdo":
        return cls({k: ring.one()}, ring)

    @classmethod
    def scalar(cls, a: Any, ring: Ring) -> "Pdo":
        return cls({0: ring.coerce(a)}, ring)

    @classmethod
    def zero(cls, ring: Ring, floor: int | None = None) -> "Pdo":
        return cls({}, ring, floor)

    @classmethod
    def differential(cls, coeffs: list[Any], ring: Ring) -> "Pdo":
        """From a dense list [a_0, a_1, ..., a_n] of a differential operator."""
        return cls({i: ring.coerce(c) for i, c in enumerate(coeffs)}, ring)

    # -- basic queries -----------------------------------------------------------------
    @property
    def top(self) -> int | None:
        """Highest nonzero degree (floor - 1 for a truncated zero, None for exact zero)."""
        if self.coeffs:
            return max(self.coeffs)
        return None if self.floor is None else self.floor - 1

    def __getitem__(self, d: int) -> Any:
        if self.floor is not None and d < self.floor:
            raise IndexError(f"degree {d} is below the precision floor {self.floor}")
        return self.coeffs.get(d, self.ring.zero())

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def degrees(self) -> list[int]:
        return sorted(self.coeffs, reverse=True)

    def items(self) -> Iterator[tuple[int, Any]]:
        for d in self.degrees():
            yield d, self.coeffs[d]

    def is_differential(self) -> bool:
        return all(d >= 0 for d in self.coeffs)

    def is_monic(self, order: int) -> bool:
        return self.top == order and self[order] == self.ring.one()

    def truncate(self, floor: int | None) -> "Pdo":
        return Pdo(self.coeffs, self.ring, _max_floor(self.floor, floor))

    def with_floor(self, floor: int | None) -> "Pdo":
        """Declare a floor on an exact operator (drops lower coefficients)."""
        return Pdo(self.coeffs, self.ring, floor)

    def _check_ring(self, other: "Pdo") -> None:
        if self.ring != other.ring:
            raise ValueError(f"mixing operators over {self.ring.name} and {other.ring.name}")

    # -- linear structure --------------------------------------------------------------
    def __add__(self, other: "Pdo") -> "Pdo":
        if not isinstance(other, Pdo):
            other = Pdo.scalar(other, self.ring)
        self._check_ring(other)
        floor = _max_floor(self.floor, other.floor)
        out = dict(self.coeffs)
        for d, c in other.coeffs.items():
            out[d] = out[d] + c if d in out else c
        return Pdo(out, self.ring, floor)

    __radd__ = __add__

    def __neg__(self) -> "Pdo":
        return Pdo({d: -c for d, c in self.coeffs.items()}, self.ring, self.floor)

    def __sub__(self, other: "Pdo") -> "Pdo":
        if not isinstance(other, Pdo):
            other = Pdo.scalar(other, self.ring)
        return self + (-other)

    def __rsub__(self, other) -> "Pdo":
        return (-self) + other

    def scale(self, a: Any) -> "Pdo":
        """Left multiplication by a coefficient (or a rational number)."""
        return Pdo({d: a * c if not isinstance(a, int) else c * a for d, c in self.coeffs.items()},
                   self.ring, self.floor)

    def __mul__(self, other) -> "Pdo":
        if isinstance(other, Pdo):
            return mul(self, other)
        return Pdo({d: c * other for d, c in self.coeffs.items()}, self.ring, self.floor)

    def __rmul__(self, other) -> "Pdo":
        return Pdo({d: other * c for d, c in self.coeffs.items()}, self.ring, self.floor)

    def __pow__(self, n: int) -> "Pdo":
        return power(self, n)

    def map(self, f) -> "Pdo":
        return Pdo({d: f(c) for d, c in self.coeffs.items()}, self.ring, self.floor)

    # -- comparisons ---------------------------------------------------------------------
    def agrees_with(self, other: "Pdo", floor: int | None = None) -> bool:
        """Coefficient equality on degrees known to both (and >= ``floor``)."""
        lo = _max_floor(self.floor, other.floor, floor)
        degs = set(self.coeffs) | set(other.coeffs)
        for d in degs:
            if lo is not None and d < lo:
                continue
            if self.coeffs.get(d, self.ring.zero()) != other.coeffs.get(d, other.ring.zero()):
                return False
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pdo):
            return NotImplemented
        return self.floor == other.floor and self.agrees_with(other)

    __hash__ = None  # mutable-looking container semantics; not hashable

    # -- text ------------------------------------------------------------------------------
    def render(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for d, c in self.items():
            parts.append(_term_text(c, d))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __str__(self) -> str:
        text = self.render()
        if self.floor is not None:
            text += f" + O(D^{self.floor - 1})"
        return text

    def __repr__(self) -> str:
        return f"Pdo('{self}')"


def _coeff_text(c: Any) -> str:
    text = str(c)
    if text.startswith("("):
        return text
    if isinstance(c, DiffPoly) and len(c.terms) > 1:
        return f"({text})"
    return text


def _term_text(c: Any, d: int) -> str:
    if d == 0:
        return str(c)
    op = "D" if d == 1 else f"D^{d}"
    if c == 1:
        return op
    if c == -1:
        return f"-{op}"
    return f"{_coeff_text(c)}*{op}"


# -- multiplication ------------------------------------------------------------------------
def product_floor(A: Pdo, B: Pdo) -> int | None:
    """Lowest degree of AB that the truncations of A and B still determine."""
    cands = []
    if A.floor is not None:
        tb = B.top
        if tb is not None:
            cands.append(A.floor + tb)
        elif B.floor is not None:
            cands.append(A.floor + B.floor - 1)
    if B.floor is not None:
        ta = A.top
        if ta is not None:
            cands.append(B.floor + ta)
        elif A.floor is not None:
            cands.append(B.floor + A.floor - 1)
    return max(cands) if cands else None


def mul(A: Pdo, B: Pdo, floor: int | None = None) -> Pdo:
    """Product AB via the generalized Leibniz rule, exact down to the result floor."""
    A._check_ring(B)
    ring = A.ring
    out_floor = _max_floor(product_floor(A, B), floor)
    if not A.coeffs or not B.coeffs:
        return Pdo({}, ring, out_floor)
    derivs = {j: _Derivatives(ring, b) for j, b in B.coeffs.items()}
    out: dict[int, Any] = {}
    for i, a in A.coeffs.items():
        for j, dv in derivs.items():
            if out_floor is not None:
                lmax = i + j - out_floor
            elif i >= 0:
                lmax = i
            else:
                stop = dv.terminates_within(MAX_LEIBNIZ_TERMS)
                if stop is None:
                    raise ValueError(
                        "product has an infinite expansion; pass a precision floor")
                lmax = stop - 1
            if i >= 0:
                lmax = min(lmax, i)
            for ell in range(0, lmax + 1):
                bd = dv.get(ell)
                if not bd:
                    if dv.dead:
                        break
                    continue
                coef = binom(i, ell)
                if not coef:
                    continue
                term = a * bd
                if coef != 1:
                    term = term * coef
                d = i + j - ell
                prev = out.get(d)
                out[d] = term if prev is None else prev + term
    return Pdo(out, ring, out_floor)


def coefficient_of_product(A: Pdo, B: Pdo, deg: int) -> Any:
    """Only the D^deg coefficient of AB (A, B assumed exact on what is used)."""
    ring = A.ring
    total = ring.zero()
    derivs: dict[int, _Derivatives] = {}
    for i, a in A.coeffs.items():
        for j, b in B.coeffs.items():
            ell = i + j - deg
            if ell < 0 or (i >= 0 and ell > i):
                continue
            dv = derivs.get(j)
            if dv is None:
                dv = derivs[j] = _Derivatives(ring, b)
            bd = dv.get(ell)
            if bd:
                total = total + a * bd * binom(i, ell)
    return total


def power(A: Pdo, n: int, floor: int | None = None) -> Pdo:
    if n < 0:
        raise ValueError("use inverse() for negative powers")
    out = Pdo.D(0, A.ring)
    top = A.top
    for k in range(1, n + 1):
        # the remaining n - k factors raise degrees by up to (n - k) * top
        step = None if floor is None or top is None else floor - (n - k) * top
        out = mul(out, A, step)
    return out


def commutator(A: Pdo, B: Pdo, floor: int | None = None) -> Pdo:
    return mul(A, B, floor) - mul(B, A, floor)


# -- adjoint, split, residue -----------------------------------------------------------------
def adjoint(A: Pdo) -> Pdo:
    """Formal adjoint sum (-1)^i D^i a_i, rewritten with coefficients on the left."""
    ring = A.ring
    out: dict[int, Any] = {}
    for i, a in A.coeffs.items():
        dv = _Derivatives(ring, a)
        if A.floor is not None:
            lmax = i - A.floor
        elif i >= 0:
            lmax = i
        else:
            stop = dv.terminates_within(MAX_LEIBNIZ_TERMS)
            if stop is None:
                raise ValueError("adjoint has an infinite expansion; give the operator a floor")
            lmax = stop - 1
        if i >= 0:
            lmax = min(lmax, i)
        sign = -1 if i % 2 else 1
        for ell in range(lmax + 1):
            ad = dv.get(ell)
            if not ad:
                if dv.dead:
                    break
                continue
            coef = sign * binom(i, ell)
            if coef:
                d = i - ell
                term = ad * coef
                out[d] = out[d] + term if d in out else term
    return Pdo(out, ring, A.floor)


def split(A: Pdo) -> tuple[Pdo, Pdo]:
    plus = {d: c for d, c in A.coeffs.items() if d >= 0}
    minus = {d: c for d, c in A.coeffs.items() if d < 0}
    plus_floor = A.floor if A.floor is not None and A.floor > 0 else None
    return Pdo(plus, A.ring, plus_floor), Pdo(minus, A.ring, A.floor)


def plus_part(A: Pdo) -> Pdo:
    return split(A)[0]


def minus_part(A: Pdo) -> Pdo:
    return split(A)[1]


def residue(A: Pdo) -> Any:
    if A.floor is not None and A.floor > -1:
        raise ValueError(f"residue unknown: precision floor {A.floor} is above -1")
    return A.coeffs.get(-1, A.ring.zero())


# -- root and inverse -------------------------------------------------------------------------
def nth_root(L: Pdo, N: int, floor: int) -> Pdo:
    """The unique P = D + sum_{i<=0} p_i D^i with P^N = L, exact down to ``floor``."""
    ring = L.ring
    if N < 1 or not L.is_monic(N):
        raise ValueError(f"operator is not monic of order {N}")
    target = floor if L.floor is None else max(floor, L.floor - N + 1)
    coeffs: dict[int, Any] = {1: ring.one()}
    inv_n = _rational(1, N)
    for d in range(0, target - 1, -1):
        # [P^N]_{N-1+d} equals N p_d plus terms from the already known p's
        deg = N - 1 + d
        if N == 1:
            known = ring.zero()
        else:
            known_part = Pdo(coeffs, ring)
            prev = power(known_part, N - 1, floor=deg - 1)
            known = coefficient_of_product(prev, known_part, deg)
        p = (L[deg] - known) * inv_n
        if p:
            coeffs[d] = p
    return Pdo(coeffs, ring, target)


def inverse(A: Pdo, floor: int) -> Pdo:
    """B with AB = BA = 1, exact down to ``floor``."""
    ring = A.ring
    m = A.top
    if m is None or not A.coeffs:
        raise ZeroDivisionError("inverse of the zero operator")
    lead = A.coeffs[m]
    if not ring.is_unit(lead):
        raise ValueError(f"leading coefficient {lead} is not a unit")
    lead_inv = ring.inverse(lead)
    target = floor if A.floor is None else max(floor, A.floor - 2 * m)
    coeffs: dict[int, Any] = {}
    for i in range(0, -m - target + 1):
        partial = Pdo(coeffs, ring)
        rhs = ring.one() if i == 0 else ring.zero()
        if coeffs:
            rhs = rhs - coefficient_of_product(A, partial, -i)
        b = lead_inv * rhs
        if b:
            coeffs[-m - i] = b
    return Pdo(coeffs, ring, target)


def fractional_power(L: Pdo, m: int, N: int, floor: int, root: Pdo | None = None) -> Pdo:
    """L^{m/N} for m >= 0, exact down to ``floor``."""
    if m < 0:
        raise ValueError("negative fractional powers are not needed here")
    if m == 0:
        return Pdo.D(0, L.ring)
    # P has top 1, so P^m to floor f needs P to floor f - m + 1
    P = root if root is not None and root.floor <= floor - m + 1 else nth_root(L, N, floor - m + 1)
    return power(P, m, floor)


def _rational(p: int, q: int):
    import gmpy2

    return gmpy2.mpq(p, q)
