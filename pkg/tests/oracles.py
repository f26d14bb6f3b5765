"""Independent reference values: hand-typed closed forms and sympy brute force.

Nothing here calls into the heatkernel PDO engine; conversions to RatFunc go
through the string parser only.
"""
from __future__ import annotations

import math

import sympy as sp

from heatkernel.exactalg.ratfunc import RatFunc

x, y, z, s1, s2 = sp.symbols("x y z s1 s2")


def tau(v):
    return (s1 + v) ** 2 / 2 + s2


# Example with tau = s1^2/2 + s2 (third-order operator, finite kernel)
U1 = -3 * (x**2 + 2 * s1 * x + s1**2 - 2 * s2) / (2 * tau(x) ** 2)
U0 = -6 * s2 * (x + s1) / tau(x) ** 3
U0_STAR = -3 * (x + s1) * ((s1 + x) ** 2 - 2 * s2) / (2 * tau(x) ** 3)
PSI = [-(s1 + x) / tau(x)]
PSI_STAR = [(s1 + x) / tau(x), 1 / tau(x)]
OMEGA = {
    0: sp.Integer(1),
    1: (x - y) * (x * y + s1 * (x + y) + s1**2 - 2 * s2) / (2 * tau(x) * tau(y)),
    2: (x**2 - 2 * x * y - 2 * s1 * y - s1**2 + 2 * s2) / (2 * tau(x) * tau(y)),
    3: -(x + s1) / (tau(x) * tau(y)),
}
H11 = -3 * (x * y + s1 * (x + y) + s1**2 - 2 * s2) / (2 * tau(x) * tau(y))
H10 = -3 * (x + s1) / (2 * tau(x) * tau(y))
DUAL_H11 = 3 * (x * y + s1 * (x + y) + s1**2 - 2 * s2) / (2 * tau(x) * tau(y))
DUAL_H10 = -3 * (y + s1) / (2 * tau(x) * tau(y))


def h_general(N: int, kappa: int) -> dict[tuple[int, int], sp.Expr]:
    """Nonzero entries of the same point viewed in order N >= 3."""
    return {
        (1, N - 2): -kappa * N * (x * y + s1 * (x + y) + s1**2 - 2 * s2) / (2 * tau(x) * tau(y)),
        (1, N - 3): -kappa * N * (x + s1) / (2 * tau(x) * tau(y)),
    }


def rf(expr) -> RatFunc:
    return RatFunc(str(sp.together(sp.sympify(expr))))


def apply_operator(coeffs: dict[int, sp.Expr], f: sp.Expr) -> sp.Expr:
    return sum(c * sp.diff(f, x, d) for d, c in coeffs.items())


def eigen_defect() -> sp.Expr:
    """L Psi - z^3 Psi for the hand-typed coefficients; zero iff they are right."""
    psi = (1 + PSI[0] / z) * sp.exp(x * z)
    L = {3: 1, 1: U1, 0: U0}
    return sp.simplify((apply_operator(L, psi) - z**3 * psi) * sp.exp(-x * z))


# -- KdV brute force ---------------------------------------------------------------------------
def kdv_flow_bruteforce() -> sp.Expr:
    """Coefficient of f in [A, L] f with A = D^3 + 3/2 u D + 3/4 u', L = D^2 + u.

    Returns that coefficient after checking every f-derivative term cancels.
    """
    u = sp.Function("u")(x)
    f = sp.Function("f")(x)

    def L(g):
        return sp.diff(g, x, 2) + u * g

    def A(g):
        return sp.diff(g, x, 3) + sp.Rational(3, 2) * u * sp.diff(g, x) + sp.Rational(3, 4) * sp.diff(u, x) * g

    expr = sp.expand(A(L(f)) - L(A(f)))
    for d in range(1, 6):
        assert sp.simplify(expr.coeff(sp.diff(f, x, d))) == 0
    return sp.expand(expr.coeff(f))


def kdv_flow_expected() -> sp.Expr:
    u = sp.Function("u")(x)
    return sp.Rational(1, 4) * sp.diff(u, x, 3) + sp.Rational(3, 2) * u * sp.diff(u, x)


# -- N = 2 closed form ---------------------------------------------------------------------------
def rising(a: int, n: int) -> int:
    out = 1
    for i in range(n):
        out *= a + i
    return out


def closed_form_weight(k: int, n: int) -> sp.Rational:
    """Weight of omega_n / (x-y)^{2k-n} in H_k^0 for N = 2."""
    return sp.Rational((-1) ** k * 2**n * rising(n, 2 * k - 2 * n), math.factorial(k - n))


def closed_form_n2(omega: dict[int, sp.Expr], k: int) -> sp.Expr:
    return sp.together(sum(closed_form_weight(k, n) * omega.get(n, 0) / (x - y) ** (2 * k - n)
                           for n in range(1, k + 1)))


# -- heat kernel from the Airy function --------------------------------------------------------
def kernel_via_ai(xv: float, yv: float, t: float, h10: float, h11: float, dual: bool = False) -> float:
    """Explicit Airy-function form of the third-order finite kernel and of its dual."""
    from scipy.special import airy

    c = (3 * t) ** (1 / 3)
    w = (xv - yv) / c
    ai, aip, _, _ = airy(w if dual else -w)
    if dual:
        return ai / c * (1 + h10 * t) + aip / (3 * t) ** (2 / 3) * h11 * t
    return ai / c * (1 + h10 * t) - aip / (3 * t) ** (2 / 3) * h11 * t


def kernel_pde_defect_symbolic() -> sp.Expr:
    """d_t K - L K for the explicit Airy kernel, with L from the hand-typed coefficients."""
    t = sp.symbols("t", positive=True)
    c = (3 * t) ** sp.Rational(1, 3)
    w = -(x - y) / c
    K = sp.airyai(w) / c * (1 + H10 * t) - sp.airyaiprime(w) / c**2 * H11 * t
    L = {3: 1, 1: U1, 0: U0}
    return sp.diff(K, t) - apply_operator(L, K), t
