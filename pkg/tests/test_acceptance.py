"""Acceptance suite: one PASS/FAIL line per criterion, each at its stated tolerance."""
from contextlib import contextmanager

import numpy as np
import pytest
import sympy as sp

import oracles as o
import test_exactalg as exactalg_props
import test_pdo as pdo_props
from conftest import EX71_TAU, ex71_dual_wave, ex71_hadamard, ex71_operator, ex71_resolvent
from heatkernel.airynum import (DEFAULT_T, DEFAULT_XY, AiryEvalConfig, KernelEvaluator, a3_via_ai,
                                airy_eval, airy_ode_residual, gaussian_a2, kernel_grid)
from heatkernel.exactalg.jets import taylor_at_diagonal
from heatkernel.exactalg.ratfunc import RatFunc
from heatkernel.gdflows import (conservation_suite, gd_boussinesq_check, gd_rhs, symbolic_operator)
from heatkernel.grassmann import baker_from_tau, krichever_operator
from heatkernel.hadamard import (closed_form_n2, contract, default_kappa, finiteness, had_diag,
                                 had_diag_dx, had_dual, had_from_resolvent, had_jet_recursion,
                                 kappa_flip, operator_identity)
from heatkernel.pdo import X_RING, Pdo, adjoint, fractional_power, residue
from heatkernel.resolvent import SymbolicResolvent, res_exact

# every exact example used by the suite, as (tau, orders it is invariant under)
EXACT_EXAMPLES = [
    ("1", (2, 3, 4)),
    ("s1", (2,)),
    (EX71_TAU, (3, 4, 5)),
    ("s1^2/2 - s2", (3,)),
    ("s1^3/3 - s3", (2, 5)),
]


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(label):
        try:
            yield
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nFAIL  {label}: {type(exc).__name__}: {exc}")
            raise
        with capsys.disabled():
            print(f"\nPASS  {label}")
    return run


def test_criterion_01_example_pipeline(criterion):
    with criterion("1 example pipeline (operator, resolvent, Hadamard table; exact)"):
        L = ex71_operator(3)
        assert L.degrees() == [3, 1, 0] and L[3] == 1
        assert L[1] == o.rf(o.U1) and L[0] == o.rf(o.U0)
        table = ex71_resolvent()
        for n in range(4):
            assert table[n] == o.rf(o.OMEGA[n])
        assert all(table[n] == 0 for n in range(4, 12))
        H = had_from_resolvent(table, 3, 1, k_max=6)
        assert H[(1, 1)] == o.rf(o.H11) and H[(1, 0)] == o.rf(o.H10)
        assert H.nonzero() == [(1, 0), (1, 1)]


def test_criterion_02_duality(criterion):
    with criterion("2 duality (dual table and adjoint operator; exact)"):
        dual = had_dual(ex71_hadamard())
        assert dual[(1, 1)] == o.rf(o.DUAL_H11) and dual[(1, 0)] == o.rf(o.DUAL_H10)
        assert dual.nonzero() == [(1, 0), (1, 1)]
        want = Pdo({3: RatFunc(-1), 1: -o.rf(o.U1), 0: o.rf(o.U0_STAR)}, X_RING)
        assert adjoint(ex71_operator(3)) == want
        # second route: the table computed directly from the dual point
        direct = had_from_resolvent(res_exact(ex71_dual_wave()), 3, -1)
        assert direct.entries == dual.entries


def test_criterion_03_higher_orders(criterion):
    with criterion("3 higher-order views N = 4, 5 and the finiteness bound (exact)"):
        for N in (4, 5):
            kappa = default_kappa(N)
            H = had_from_resolvent(ex71_resolvent(), N, kappa, k_max=5)
            want = o.h_general(N, kappa)
            assert H.nonzero() == sorted(want) == [(1, N - 3), (1, N - 2)]
            for key, expr in want.items():
                assert H[key] == o.rf(expr)
            rep = finiteness(ex71_resolvent(), N)
            assert rep.m == 3 and rep.guaranteed_cutoff == 2 and H.cutoff == 2


def test_criterion_04_cross_method(criterion):
    with criterion("4 cross-method Hadamard agreement, k <= 3, jet order <= 4 (exact)"):
        k_max, order = 3, 5
        for N in (2, 3):
            jets = had_jet_recursion(N, 1, k_max, order)
            S = SymbolicResolvent(symbolic_operator(N), N, k_max * N, 1)
            for k in range(1, k_max + 1):
                for j in range(N - 1):
                    assert jets[(k, j)][0] == had_diag(S, 1, k, j), (N, k, j)
                    assert jets[(k, j)].x_derivative_on_diagonal(1) == had_diag_dx(S, 1, k, j), (N, k, j)
            for tau in {2: ("s1", "s1^3/3 - s3"), 3: (EX71_TAU, "s1^2/2 - s2")}[N]:
                wave = baker_from_tau(tau, keep_params=True)
                L = krichever_operator(wave, N).differential
                env = {j: L[j] for j in range(N - 1)}
                exact = had_from_resolvent(res_exact(wave), N, 1, k_max=k_max)
                for k in range(1, k_max + 1):
                    for j in range(N - 1):
                        taylor = taylor_at_diagonal(exact[(k, j)], order)
                        bound = jets[(k, j)].map(lambda c: c.substitute(env) if c else RatFunc())
                        assert taylor == bound, (tau, k, j)
                        assert had_diag(S, 1, k, j).substitute(env) == taylor[0], (tau, k, j)


def test_criterion_05_closed_form(criterion):
    with criterion("5 N = 2 closed form equals the contraction, k <= 5 (exact)"):
        for tau in ("s1", EX71_TAU):
            table = res_exact(baker_from_tau(tau, keep_params=True))
            for k in range(1, 6):
                assert closed_form_n2(table, k) == contract(table, 2, 1, k, 0), (tau, k)
        for k in range(1, 6):
            assert closed_form_n2(ex71_resolvent(), k) == o.rf(o.closed_form_n2(o.OMEGA, k))


def test_criterion_06_structural_identities(criterion):
    with criterion("6 residue vanishing, diagonal vanishing, operator identity at floor -2N (exact)"):
        for N in (2, 3, 4):
            L = symbolic_operator(N)
            S = SymbolicResolvent(L, N, 3 * N + 1, 0)
            for ell in (1, 2, 3):
                assert residue(fractional_power(L, ell * N, N, floor=-1)) == 0, (N, ell)
                assert S.jet(ell * N + 1, 0) == 0, (N, ell)
        for tau, orders in EXACT_EXAMPLES:
            table = res_exact(baker_from_tau(tau, keep_params=True))
            for N in orders:
                H = had_from_resolvent(table, N, default_kappa(N))
                assert operator_identity(H, table, -2 * N), (tau, N)


def test_criterion_07_gelfand_dickey(criterion):
    with criterion("7 Gelfand-Dickey flows, KdV and Boussinesq forms (exact)"):
        for N in (2, 3, 4, 5):
            L = symbolic_operator(N)
            assert gd_rhs(L, 1).rhs == {j: L[j].derive() for j in range(N - 1)}
            assert all(not v for v in gd_rhs(L, N).rhs.values())
        kdv = gd_rhs(symbolic_operator(2), 3).rhs[0]
        assert str(kdv) == "1/4*u0''' + 3/2*u0*u0'"
        u = sp.Function("u")(o.x)
        as_sympy = sp.diff(u, o.x, 3) / 4 + sp.Rational(3, 2) * u * sp.diff(u, o.x)
        assert sp.simplify(as_sympy - o.kdv_flow_bruteforce()) == 0
        for k in (1, 2):
            assert gd_boussinesq_check(symbolic_operator(3), k)


def test_criterion_08_conservation(criterion):
    with criterion("8 conservation of the diagonal coefficients, m <= 3, k <= 4 (exact)"):
        for N in (2, 3):
            results = conservation_suite(N, 3, 4)
            assert len(results) == 3 * 4 * (N - 1)
            assert all(r.conserved for r in results), [r.render() for r in results if not r.conserved]


def test_criterion_09_numerics(criterion):
    with criterion("9 Airy evaluation and kernel residuals at their numeric tolerances"):
        cfg2 = AiryEvalConfig(2, 1)
        assert max(abs(airy_eval(cfg2, z) - gaussian_a2(z)) for z in np.linspace(-5, 5, 101)) < 1e-10
        for kappa in (1, -1):
            cfg3 = AiryEvalConfig(3, kappa)
            assert max(abs(airy_eval(cfg3, z) - a3_via_ai(z, kappa)) for z in np.linspace(-4, 4, 81)) < 1e-8
        grid = np.linspace(-3, 3, 13)
        for N in (3, 4, 5):
            for kappa in ((1, -1) if N % 2 else (default_kappa(N),)):
                cfg = AiryEvalConfig(N, kappa)
                assert max(abs(airy_ode_residual(cfg, z)) for z in grid) < 1e-6, (N, kappa)
        wave = baker_from_tau(EX71_TAU, params={"s1": 0, "s2": 1})
        L = krichever_operator(wave, 3).differential
        table = had_from_resolvent(res_exact(wave), 3, 1)
        samples = kernel_grid(table, L, AiryEvalConfig(3, 1))
        assert len(samples) == 75 and max(abs(s.residual) for s in samples) < 1e-6
        ev = KernelEvaluator(had_dual(table), adjoint(L), AiryEvalConfig(3, 1))
        dual = [ev.sample(xv, yv, t) for xv in DEFAULT_XY for yv in DEFAULT_XY for t in DEFAULT_T]
        assert len(dual) == 75 and max(abs(s.residual) for s in dual) < 1e-6


def test_criterion_10_property_suites(criterion):
    with criterion("10 randomized property suites and the kappa flip on an odd-order example"):
        pdo_props.test_associativity()
        pdo_props.test_adjoint_antiautomorphism()
        pdo_props.test_adjoint_involution()
        pdo_props.test_floor_soundness_of_products()
        pdo_props.test_floor_soundness_of_roots_and_inverses()
        exactalg_props.test_canonical_form_unique()
        exactalg_props.test_canonical_form_route_independent()
        flipped = had_from_resolvent(ex71_resolvent(), 3, -1)
        assert flipped.entries == kappa_flip(ex71_hadamard()).entries
        assert flipped.entries != ex71_hadamard().entries
