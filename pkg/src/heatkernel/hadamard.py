"""Hadamard coefficients H_k^j: residue formula, jet recursions, diagonal values, finiteness."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Any, Mapping

import gmpy2

from .exactalg import poly as P
from .exactalg.diffpoly import DiffPoly
from .exactalg.jets import DiagJet
from .exactalg.ratfunc import RatFunc, X, Y
from .pdo import H_RING, X_RING, Pdo, mul, power
from .resolvent import ResolventTable, SymbolicResolvent

Q = gmpy2.mpq


class SmoothnessError(ArithmeticError):
    """A computed coefficient is singular on the diagonal y = x."""


class JetBudgetError(ValueError):
    """The requested depth cannot be reached with the jet budget."""


def check_kappa(N: int, kappa: int) -> None:
    if N < 2:
        raise ValueError("N must be at least 2")
    if kappa not in (1, -1):
        raise ValueError("kappa must be +1 or -1")
    if N % 2 == 0 and kappa != (-1) ** (N // 2 + 1):
        raise ValueError(f"for even N = {N} kappa must be {(-1) ** (N // 2 + 1):+d}")


def default_kappa(N: int) -> int:
    return (-1) ** (N // 2 + 1) if N % 2 == 0 else 1


def pochhammer(a, k: int):
    out = Q(1)
    a = Q(a)
    for i in range(k):
        out *= a + i
    return out


@dataclass
class HadamardTable:
    N: int
    kappa: int
    entries: dict[tuple[int, int], Any]
    mode: str = "exact"          # "exact" (RatFunc in x, y) or "jet" (DiagJet)
    finite: bool = False
    cutoff: int | None = None    # observed: all entries vanish for k >= cutoff
    guaranteed_cutoff: int | None = None
    k_max: int = 0

    def __getitem__(self, key: tuple[int, int]) -> Any:
        k, j = key
        if key in self.entries:
            return self.entries[key]
        if self.finite and self.cutoff is not None and k >= self.cutoff and 0 <= j <= self.N - 2:
            return RatFunc() if self.mode == "exact" else None
        raise KeyError(f"H_{k}^{j} was not computed")

    def nonzero(self) -> list[tuple[int, int]]:
        return sorted(key for key, v in self.entries.items() if _nonzero(v))

    def render(self) -> str:
        lines = [f"N = {self.N}, kappa = {self.kappa:+d}"]
        for (k, j) in sorted(self.entries):
            lines.append(f"H[{k},{j}] = {self.entries[(k, j)]}")
        if self.mode == "exact":
            lines.append(f"finite = {str(self.finite).lower()}, cutoff = {self.cutoff}")
        return "\n".join(lines) + "\n"

    def to_json(self, nonzero_only: bool = True) -> str:
        items = []
        for (k, j) in sorted(self.entries):
            v = self.entries[(k, j)]
            if nonzero_only and not _nonzero(v):
                continue
            if self.mode == "exact":
                items.append({"k": k, "j": j, "value": str(v)})
            else:
                items.append({"k": k, "j": j, "order": v.order, "jet": [str(c) for c in v.coeffs]})
        return json.dumps({"N": self.N, "kappa": self.kappa, "entries": items,
                           "finite": self.finite, "cutoff": self.cutoff}, indent=2) + "\n"


def _nonzero(v) -> bool:
    if isinstance(v, DiagJet):
        return any(bool(c) for c in v.coeffs)
    return bool(v)


# -- residue weights -------------------------------------------------------------------------------
@lru_cache(maxsize=None)
def residue_weights(N: int, kappa: int, k: int, j: int) -> dict[int, "gmpy2.mpq"]:
    """b_{k,j,n} with H_k^j = sum_n b_n (x-y)^{n-1} omega_n / (x-y)^{kN-j-1}.

    The residue of D^{-n} (h^{-1} D^{N-1})^k D^{-j-1} is the D^j coefficient of
    D^{-n} X_k, computed over Laurent polynomials in h with Dh = 1; it is a
    single monomial c h^{n-kN+j}, and b_n = (-kappa N)^k c.
    """
    check_kappa(N, kappa)
    if k < 1 or not 0 <= j <= N - 2:
        raise ValueError("need k >= 1 and 0 <= j <= N-2")
    h_inv = RatFunc(1, P.var("h"))
    step = Pdo({N - 1: h_inv}, H_RING)
    Xk = power(step, k)
    scale = Q(-kappa * N) ** k
    out = {}
    for n in range(1, k * (N - 1) - j + 1):
        prod = mul(Pdo.D(-n, H_RING), Xk, floor=j)
        c = prod[j]
        if not c:
            continue
        if not c.den.is_ground and len(c.den) != 1 or len(c.num) != 1:
            raise ArithmeticError(f"residue is not a monomial in h: {c}")
        expo = _h_exponent(c)
        if expo != n - k * N + j:
            raise ArithmeticError(f"unexpected h-power {expo} in residue weight")
        coeff = c.num.LC / c.den.LC
        out[n] = scale * coeff
    return out


def _h_exponent(c: RatFunc) -> int:
    i = P.INDEX["h"]
    (num_e,) = list(c.num.keys())
    (den_e,) = list(c.den.keys())
    return num_e[i] - den_e[i]


# -- exact coefficients from the resolvent -----------------------------------------------------------
def _diag_x_minus_y() -> RatFunc:
    return X - Y


def contract(table: ResolventTable, N: int, kappa: int, k: int, j: int) -> RatFunc:
    """sum_n b_n (x-y)^{n-1} omega_n / (x-y)^{kN-j-1} without the smoothness check."""
    w = residue_weights(N, kappa, k, j)
    h = _diag_x_minus_y()
    num = RatFunc()
    for n, b in w.items():
        om = table[n]
        if om:
            num = num + om * (h ** (n - 1)) * b
    if not num:
        return num
    return num / h ** (k * N - j - 1)


def is_smooth_on_diagonal(f: RatFunc) -> bool:
    if not f:
        return True
    den = f.den
    if P.degree_in(den, ("y",)) <= 0 and P.degree_in(den, ("x",)) <= 0:
        return True
    return bool(P.substitute(den, {"y": P.var("x")}))


def hadamard_exact(table: ResolventTable, N: int, kappa: int, k: int, j: int) -> RatFunc:
    H = contract(table, N, kappa, k, j)
    if not is_smooth_on_diagonal(H):
        raise SmoothnessError(f"H_{k}^{j} has a pole on y = x: {H}")
    return H


@dataclass
class FinitenessReport:
    m: int
    guaranteed_cutoff: int                 # H_k^j = 0 for all k >= this
    per_j_cutoff: dict[int, int]           # H_k^j = 0 for k >= this (sharper bound)
    observed_cutoff: int | None = None

    def render(self) -> str:
        lines = [f"m = {self.m}", f"guaranteed cutoff: H_k^j = 0 for k >= {self.guaranteed_cutoff}"]
        for j, k in sorted(self.per_j_cutoff.items()):
            lines.append(f"  j = {j}: H_k^j = 0 for k >= {k}")
        if self.observed_cutoff is not None:
            lines.append(f"observed cutoff: {self.observed_cutoff}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "guaranteedCutoff": self.guaranteed_cutoff,
                           "perJ": {str(j): k for j, k in sorted(self.per_j_cutoff.items())},
                           "observedCutoff": self.observed_cutoff}, indent=2) + "\n"


def finiteness(table: ResolventTable, N: int) -> FinitenessReport:
    """m = max over nonzero omega_n of n - 1 + deg(omega_n tau(x) tau(y))."""
    if table.vanishing_index is None:
        raise ValueError("resolvent does not terminate: not a Gr_0 operator")
    tx = table.tau_x
    ty = tx.rename("x", "y") if "x" in tx.variables() else tx
    clear = tx * ty
    m = None
    for n in range(1, len(table.omega)):
        om = table.omega[n]
        if not om:
            continue
        wt = om * clear
        if not wt.is_polynomial:
            raise ArithmeticError(f"omega_{n} tau(x) tau(y) is not a polynomial")
        deg = P.degree_in(wt.num, ("x", "y"))
        cand = n - 1 + deg
        m = cand if m is None else max(m, cand)
    if m is None:
        return FinitenessReport(-1, 1, {j: 1 for j in range(N - 1)})
    # (k-1) N >= m  and  kN - j - 1 >= m + 1
    k_all = -(-m // N) + 1
    per_j = {j: -(-(m + 2 + j) // N) for j in range(N - 1)}
    per_j = {j: max(k, 1) for j, k in per_j.items()}
    return FinitenessReport(m, max(k_all, 1), per_j)


def had_from_resolvent(table: ResolventTable, N: int, kappa: int, k_max: int | None = None) -> HadamardTable:
    """All H_k^j for k <= k_max (default: through the guaranteed cutoff)."""
    check_kappa(N, kappa)
    rep = finiteness(table, N) if table.vanishing_index is not None else None
    if k_max is None:
        if rep is None:
            raise ValueError("k_max is required for a non-terminating resolvent")
        k_max = rep.guaranteed_cutoff
    entries = {}
    for k in range(1, k_max + 1):
        for j in range(N - 1):
            entries[(k, j)] = hadamard_exact(table, N, kappa, k, j)
    last = max((k for (k, j), v in entries.items() if v), default=0)
    finite = rep is not None and k_max >= rep.guaranteed_cutoff
    cutoff = last + 1 if finite else None
    if rep is not None:
        rep.observed_cutoff = cutoff
        for (k, j), v in entries.items():
            if v and k >= rep.per_j_cutoff[j]:
                raise ArithmeticError(f"finiteness bound violated by H_{k}^{j}")
    return HadamardTable(N, kappa, entries, "exact", finite, cutoff,
                         rep.guaranteed_cutoff if rep else None, k_max)


def closed_form_n2(table: ResolventTable, k: int) -> RatFunc:
    """H_k^0 for N = 2 via (-1)^k sum_n 2^n (n)_{2k-2n} / (k-n)! omega_n / (x-y)^{2k-n}."""
    h = _diag_x_minus_y()
    total = RatFunc()
    for n in range(1, k + 1):
        om = table[n]
        if not om:
            continue
        c = Q(2) ** n * pochhammer(n, 2 * k - 2 * n) / factorial(k - n)
        total = total + om * c / h ** (2 * k - n)
    return total * (-1) ** k


def had_dual(table: HadamardTable) -> HadamardTable:
    """Table of d/dt v = kappa L* v: H~_k^j(x, y) = (-1)^j H_k^j(y, x)."""
    if table.mode != "exact":
        raise ValueError("had_dual needs an exact table")
    entries = {}
    for (k, j), v in table.entries.items():
        s = v.swap("x", "y")
        entries[(k, j)] = -s if j % 2 else s
    return HadamardTable(table.N, table.kappa, entries, "exact", table.finite, table.cutoff,
                         table.guaranteed_cutoff, table.k_max)


def kappa_flip(table: HadamardTable) -> HadamardTable:
    """Coefficients for -kappa (odd N): H_k^j -> (-1)^k H_k^j."""
    if table.N % 2 == 0:
        raise ValueError("kappa can only be flipped for odd N")
    entries = {(k, j): (-v if k % 2 else v) for (k, j), v in table.entries.items()}
    return HadamardTable(table.N, -table.kappa, entries, table.mode, table.finite, table.cutoff,
                         table.guaranteed_cutoff, table.k_max)


# -- operator identity -----------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _dn_power(N: int, j: int, k: int) -> Pdo:
    """D^j D_N^k over Q(x, y), with D_N = -(x-y) D^{1-N} + (N-1) D^{-N}."""
    DN = Pdo({1 - N: -(X - Y), -N: RatFunc(N - 1)}, X_RING)
    out = Pdo.D(j, X_RING)
    for _ in range(k):
        out = mul(out, DN)
    return out


def operator_identity(htable: HadamardTable, rtable: ResolventTable, floor: int) -> bool:
    """1 + sum H_k^j kappa^k/N^k D^j D_N^k == sum omega_n D^{-n} down to ``floor``."""
    N, kappa = htable.N, htable.kappa
    lhs = Pdo.D(0, X_RING).with_floor(floor)
    k = 1
    while 1 - k * (N - 1) + (N - 2) >= floor or k <= 1:
        # top degree of D^j D_N^k is j - k(N-1)
        if (N - 2) - k * (N - 1) < floor:
            break
        for j in range(N - 1):
            if j - k * (N - 1) < floor:
                continue
            try:
                Hkj = htable[(k, j)]
            except KeyError:
                raise ValueError(f"precision floor {floor} needs H_{k}^{j}, which is missing") from None
            if not Hkj:
                continue
            term = _dn_power(N, j, k).with_floor(floor)
            lhs = lhs + term.map(lambda c: c * Hkj * (Q(kappa) ** k / Q(N) ** k))
        k += 1
    rhs = Pdo({-n: rtable[n] for n in range(0, -floor + 1)}, X_RING, floor)
    return lhs.agrees_with(rhs, floor)


# -- diagonal values and first derivatives -----------------------------------------------------------
def diagonal_factor(N: int, kappa: int, k: int, j: int):
    """H_k^j(x, x) = factor * omega_{kN-j}(x, x)."""
    return Q(kappa) ** k / pochhammer(1 - Q(j + 1, N), k)


def had_diag(S: SymbolicResolvent, kappa: int, k: int, j: int) -> Any:
    """H_k^j(x, x) = kappa^k / (1-(j+1)/N)_k * res L^{k-(j+1)/N}."""
    N = S.N
    check_kappa(N, kappa)
    return S.diag_residue(k * N - j - 1) * diagonal_factor(N, kappa, k, j)


@lru_cache(maxsize=None)
def _h_linear_coefficient(N: int, j: int, k: int):
    """Coefficient of h D^{j-kN+1} in D^j D_N^k (h = x - y); zero when j < 0."""
    if j < 0:
        return Q(0)
    h = P.var("h")
    DN = Pdo({1 - N: RatFunc(-h), -N: RatFunc(N - 1)}, H_RING)
    op = Pdo.D(j, H_RING)
    for _ in range(k):
        op = mul(op, DN)
    c = op[j - k * N + 1]
    if not c:
        return Q(0)
    if not c.den.is_ground or P.degree_in(c.num, ("h",)) != 1 or len(c.num) != 1:
        raise ArithmeticError(f"unexpected coefficient {c}")
    return c.num.LC / c.den.LC


def had_diag_dx(S: SymbolicResolvent, kappa: int, k: int, j: int) -> Any:
    """d_x H_k^j(x, y)|_{y=x} from the resolvent jets.

    Differentiating the operator identity in x and setting y = x gives
    d_x omega_n| = c e_0 d_x H_k^j| + [j >= 1] c e_1 H_k^{j-1}(x, x), n = kN - j,
    with c = kappa^k / N^k and e_0, e_1 the h^0 and h^1 weights of D^j D_N^k.
    """
    N = S.N
    n = k * N - j
    # d_x omega_n(x, y)|_{y=x} = (omega_n(x, x))' - d_y omega_n|_{y=x}
    dx_omega = S.jet(n, 0).diff("x") - S.jet(n, 1)
    c = Q(kappa) ** k / Q(N) ** k
    e0 = Q(N) ** k * pochhammer(1 - Q(j + 1, N), k)
    rest = dx_omega
    if j >= 1:
        e1 = _h_linear_coefficient(N, j - 1, k)
        if e1:
            rest = rest - had_diag(S, kappa, k, j - 1) * (c * e1)
    return rest * (1 / (c * e0))


# -- jet recursions (N = 2, 3) ------------------------------------------------------------------------
def _solve_step(rhs: DiagJet, K: int, cap: int) -> DiagJet:
    """Unique smooth H with K H + h d_x H = rhs: c_m = (a_m - c_{m-1}') / (K + m)."""
    order = cap if rhs.order is None else min(rhs.order, cap)
    coeffs = []
    prev = None
    for m in range(order):
        a = rhs[m]
        if prev is not None:
            a = a - prev.diff("x")
        c = a * Q(1, K + m)
        coeffs.append(c)
        prev = c
    return DiagJet(coeffs, order, rhs.zero)


def _apply_L(J: DiagJet, us: list[DiagJet], N: int) -> DiagJet:
    out = J.dx(N)
    for i, u in enumerate(us):
        if u.coeffs:
            out = out + u * J.dx(i)
    return out


def _run_recursion(N: int, k_max: int, cap: int, us: list, zero, one) -> dict[tuple[int, int], DiagJet]:
    ujets = [DiagJet.constant(u, zero) if u else DiagJet([], None, zero) for u in us]
    jets: dict[tuple[int, int], DiagJet] = {(0, 0): DiagJet.constant(one, zero)}
    for j in range(1, N - 1):
        jets[(0, j)] = DiagJet([], None, zero)
    if N == 2:
        for k in range(k_max):
            rhs = _apply_L(jets[(k, 0)], ujets, 2)
            jets[(k + 1, 0)] = _solve_step(rhs, k + 1, cap)
    elif N == 3:
        u1 = ujets[1]
        for k in range(k_max):
            H0, H1 = jets[(k, 0)], jets[(k, 1)]
            rhs1 = _apply_L(H1, ujets, 3) + H0.dx(2) * 3 + u1 * H0
            new1 = _solve_step(rhs1, k + 1, cap)
            rhs0 = (_apply_L(H0, ujets, 3) - new1.dx(2).times_h() - new1.dx()
                    - (u1 * new1).times_h() * Q(1, 3))
            jets[(k + 1, 1)] = new1
            jets[(k + 1, 0)] = _solve_step(rhs0, k + 1, cap)
    else:
        raise ValueError("explicit jet recursions exist only for N = 2 and N = 3")
    return {key: v for key, v in jets.items() if key[0] >= 1}


def jet_budget(N: int, k_max: int, order: int, max_cap: int = 96) -> int:
    """Smallest initial cap giving every H_k^j (k <= k_max) at least ``order`` coefficients."""
    zero = DiffPoly()
    for cap in range(order, max_cap + 1):
        jets = _run_recursion(N, k_max, cap, [zero] * (N - 1), zero, DiffPoly.constant(1))
        if all(v.order is None or v.order >= order for v in jets.values()):
            return cap
    raise JetBudgetError(f"jet order {order} at depth {k_max} needs more than {max_cap} coefficients")


def had_jet_recursion(N: int, kappa: int, k_max: int, order: int,
                      potentials: Mapping[int, Any] | None = None) -> HadamardTable:
    """Diagonal jets of H_k^j for N in {2, 3}; ``order`` coefficients h^0..h^{order-1} each.

    Potentials default to the symbolic generators u_j; pass RatFuncs in x to
    get the jets of a concrete operator.
    """
    check_kappa(N, kappa)
    if N not in (2, 3):
        raise ValueError("explicit jet recursions exist only for N = 2 and N = 3")
    if potentials is None:
        us = [DiffPoly.gen(j) for j in range(N - 1)]
        zero, one = DiffPoly(), DiffPoly.constant(1)
    else:
        us = [potentials.get(j, RatFunc()) for j in range(N - 1)]
        zero, one = RatFunc(), RatFunc(1)
    cap = jet_budget(N, k_max, order)
    jets = _run_recursion(N, k_max, cap, us, zero, one)
    out = {}
    for (k, j), v in jets.items():
        v = DiagJet(v.coeffs, order, zero)
        if kappa == -1 and k % 2:
            v = -v
        out[(k, j)] = v
    return HadamardTable(N, kappa, out, "jet", k_max=k_max)
