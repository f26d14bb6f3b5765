"""Gelfand-Dickey flows, Boussinesq flows in Hadamard form, first integrals and conservation tests."""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import prod
from typing import Any

import gmpy2

from .exactalg.diffpoly import DiffPoly, generic_operator_coeffs, total_derivative_test
from .hadamard import default_kappa, had_diag, had_diag_dx, pochhammer
from .pdo import DP_RING, Pdo, commutator, fractional_power, plus_part
from .resolvent import SymbolicResolvent

Q = gmpy2.mpq


def symbolic_operator(N: int) -> Pdo:
    """D^N + u_{N-2} D^{N-2} + ... + u_0 with generic differential-polynomial coefficients."""
    if N < 2:
        raise ValueError("N must be at least 2")
    coeffs = {N: DP_RING.one()}
    for j, u in enumerate(generic_operator_coeffs(N)):
        coeffs[j] = u
    return Pdo(coeffs, DP_RING)


def _order(L: Pdo) -> int:
    N = L.top
    if N is None or N < 1 or not L.is_monic(N) or not L.is_differential():
        raise ValueError("expected a monic differential operator")
    if L[N - 1]:
        raise ValueError("operator must have zero D^(N-1) coefficient")
    return N


def flow_operator(L: Pdo, m: int) -> Pdo:
    """[(L^{m/N})_+, L] as an exact differential operator of order <= N - 2."""
    if m < 1:
        raise ValueError("flow index must be positive")
    N = _order(L)
    A = plus_part(fractional_power(L, m, N, floor=0))
    C = commutator(A, L)
    for d in C.degrees():
        if d >= N - 1:
            raise ArithmeticError(f"flow has a nonzero D^{d} term; the root is inconsistent")
    return C


@dataclass
class FlowReport:
    m: int
    rhs: dict[int, Any]
    matched_against: str | None = None

    def render(self) -> str:
        lines = [f"m = {self.m}"]
        for j in sorted(self.rhs):
            lines.append(f"du{j}/ds{self.m} = {self.rhs[j]}")
        if self.matched_against:
            lines.append(f"matched against: {self.matched_against}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        out: dict[str, Any] = {"m": self.m, "rhs": {f"u{j}": str(self.rhs[j]) for j in sorted(self.rhs)}}
        if self.matched_against:
            out["matchedAgainst"] = self.matched_against
        return json.dumps(out, indent=2) + "\n"


def gd_rhs(L: Pdo, m: int) -> FlowReport:
    N = _order(L)
    C = flow_operator(L, m)
    return FlowReport(m, {j: C[j] for j in range(N - 1)})


# -- Boussinesq in Hadamard form ----------------------------------------------------------------
def boussinesq_rhs(S: SymbolicResolvent, k: int, branch: int) -> dict[int, Any]:
    """Right-hand sides for m = 3k - 2 (branch 1) or m = 3k - 1 (branch 2) from diagonal data."""
    if S.N != 3:
        raise ValueError("the Boussinesq form needs N = 3")
    if branch == 1:
        c = 3 * pochhammer(Q(1, 3), k)
        u1 = had_diag(S, 1, k, 1).diff("x") * c
        u0 = (had_diag(S, 1, k, 0) + had_diag_dx(S, 1, k, 1)).diff("x") * c
    elif branch == 2:
        c = 3 * pochhammer(Q(2, 3), k)
        u1 = had_diag(S, 1, k, 0).diff("x") * c
        u0 = had_diag_dx(S, 1, k, 0).diff("x") * c
    else:
        raise ValueError("branch must be 1 or 2")
    return {0: u0, 1: u1}


def gd_boussinesq_check(L: Pdo, k: int) -> bool:
    """Both GD flows m = 3k-2, 3k-1 equal their Hadamard-form right-hand sides."""
    if _order(L) != 3:
        raise ValueError("the Boussinesq form needs N = 3")
    S = SymbolicResolvent(L, 3, 3 * k, 1)
    for branch, m in ((1, 3 * k - 2), (2, 3 * k - 1)):
        flow = gd_rhs(L, m).rhs
        want = boussinesq_rhs(S, k, branch)
        if any(flow[j] != want[j] for j in (0, 1)):
            return False
    return True


def kdv_hadamard_rhs(S: SymbolicResolvent, m: int) -> Any:
    """(2m-1)!!/2^{m-1} d/dx H_m^0(x, x) for N = 2."""
    if S.N != 2:
        raise ValueError("the KdV form needs N = 2")
    dfact = prod(range(1, 2 * m, 2))
    return had_diag(S, 1, m, 0).diff("x") * Q(dfact, 2 ** (m - 1))


# -- first integrals and conservation -------------------------------------------------------------
def gd_first_integral_integrand(L: Pdo, k: int, j: int, kappa: int | None = None) -> Any:
    """H_k^j(x, x), the density of the first integral J_{k,j}."""
    N = _order(L)
    S = SymbolicResolvent(L, N, k * N - j, 0)
    return had_diag(S, default_kappa(N) if kappa is None else kappa, k, j)


def gd_euler_test(p: DiffPoly) -> bool:
    if p.constant_term():
        raise ValueError("the Euler test needs a differential polynomial without constant term")
    return total_derivative_test(p)


def flow_derivative(p: DiffPoly, report: FlowReport) -> DiffPoly:
    """d/ds_m of a density by the chain rule along the flow in ``report``."""
    return p.flow(report.rhs)


@dataclass
class ConservationResult:
    N: int
    m: int
    k: int
    j: int
    conserved: bool

    def render(self) -> str:
        return f"N={self.N} m={self.m} k={self.k} j={self.j}: {'total derivative' if self.conserved else 'NOT conserved'}"


def conservation_suite(N: int, m_max: int, k_max: int) -> list[ConservationResult]:
    """Euler-operator check of d/ds_m H_k^j(x, x) for every m <= m_max, k <= k_max, j."""
    L = symbolic_operator(N)
    S = SymbolicResolvent(L, N, k_max * N, 0)
    flows = {m: gd_rhs(L, m) for m in range(1, m_max + 1)}
    kappa = default_kappa(N)
    out = []
    for k in range(1, k_max + 1):
        for j in range(N - 1):
            dens = had_diag(S, kappa, k, j)
            for m, rep in flows.items():
                out.append(ConservationResult(N, m, k, j, total_derivative_test(flow_derivative(dens, rep))))
    return out


def flows_commute_on(p: DiffPoly, a: FlowReport, b: FlowReport) -> bool:
    return flow_derivative(flow_derivative(p, a), b) == flow_derivative(flow_derivative(p, b), a)


# -- parameter flows on concrete operators ----------------------------------------------------------
def parameter_flow_sign(L: Pdo, param: str, m: int) -> int | None:
    """+1 or -1 if dL/d(param) = +-[(L^{m/N})_+, L] coefficientwise, else None."""
    C = flow_operator(L, m)
    dL = Pdo({d: c.diff(param) for d, c in L.coeffs.items()}, L.ring)
    if not dL and not C:
        return 1
    if dL.agrees_with(C):
        return 1
    if dL.agrees_with(-C):
        return -1
    return None
