import json

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

import oracles as o
from conftest import ex71_dual_wave, ex71_resolvent, ex71_wave
from heatkernel.exactalg.diffpoly import DiffPoly
from heatkernel.exactalg.jets import DiagJet
from heatkernel.exactalg.ratfunc import RatFunc, X
from heatkernel.gdflows import symbolic_operator
from heatkernel.grassmann import baker_from_tau, krichever_operator
from heatkernel.resolvent import (SymbolicResolvent, check_duality, exact_jets, res_diag_jet,
                                  res_exact)


def test_trivial_resolvent():
    t = res_exact(baker_from_tau("1"))
    assert t.omega == [RatFunc(1)]
    assert t[1] == 0 and t[7] == 0


def test_example_resolvent():
    t = ex71_resolvent()
    for n in range(4):
        assert t[n] == o.rf(o.OMEGA[n])
    assert t.vanishing_index == 4
    assert all(t[n] == 0 for n in range(4, 9))


def test_example_json():
    data = json.loads(ex71_resolvent().to_json())
    assert data["vanishingIndex"] == 4 and data["omega"][0] == "(1)/(1)"


def test_duality_example():
    assert check_duality(ex71_resolvent(), res_exact(ex71_dual_wave()))
    triv = res_exact(baker_from_tau("1"))
    assert check_duality(triv, triv)


@given(st.integers(0, 3), st.sampled_from(["x", "y", "s1", "1/(x + 3)"]))
@settings(max_examples=30)
def test_duality_detects_perturbation(n, bump):
    t = ex71_resolvent()
    dual = res_exact(ex71_dual_wave())
    broken = list(dual.omega)
    broken[n] = broken[n] + RatFunc(bump)
    assert not check_duality(t, type(dual)(broken, dual.vanishing_index, dual.tau_x))


def test_symbolic_n2_example():
    L = symbolic_operator(2)
    assert res_diag_jet(L, 2, 2, 0) == DiffPoly.gen(0) / 2


@pytest.mark.parametrize("N", [2, 3, 4])
def test_diagonal_vanishes_at_one_mod_n(N):
    S = SymbolicResolvent(symbolic_operator(N), N, 3 * N + 1, 0)
    for ell in range(4):
        assert S.jet(ell * N + 1, 0) == 0
    assert any(S.jet(n, 0) for n in range(2, N + 1))


def test_exact_diagonal_vanishes_at_one_mod_n():
    t = ex71_resolvent()
    for n in (1, 4, 7):
        assert t[n].compose("y", X) == 0
    kdv = res_exact(baker_from_tau("s1^3/3 - s3"))
    for n in (1, 3, 5, 7):
        assert kdv[n].compose("y", X) == 0


def test_jet_range_is_enforced():
    S = SymbolicResolvent(symbolic_operator(3), 3, 4, 1)
    with pytest.raises(ValueError):
        S.jet(5, 0)
    with pytest.raises(ValueError):
        S.jet(2, 2)


def _bindings(L):
    return {j: L[j] for j in range(L.top - 1)}


@pytest.mark.parametrize("tau,N", [("s1^2/2 + s2", 3), ("s1^2/2 + s2", 4), ("s1^3/3 - s3", 2),
                                   ("s1", 2), ("s1^2/2 - s2", 3)])
def test_off_diagonal_jets_match_exact_tables(tau, N):
    """The binomial off-diagonal formula, validated against exact resolvents."""
    wave = baker_from_tau(tau, keep_params=tau == "s1^2/2 + s2")
    L = krichever_operator(wave, N).differential
    table = res_exact(wave)
    n_max, m_max = 6, 4
    S = SymbolicResolvent(symbolic_operator(N), N, n_max, m_max)
    env = _bindings(L)
    for n in range(1, n_max + 1):
        want = exact_jets(table, n, m_max)
        for m in range(m_max + 1):
            assert S.jet(n, m).substitute(env) == want[m], (n, m)


def test_jets_computed_over_the_concrete_ring_agree():
    L = krichever_operator(ex71_wave(), 3).differential
    table = ex71_resolvent()
    S = SymbolicResolvent(L, 3, 5, 3)
    for n in range(1, 6):
        assert [S.jet(n, m) for m in range(4)] == exact_jets(table, n, 3)


def test_self_adjoint_symmetry_at_jet_level():
    """For N = 2 each omega_n(x, y) equals (-1)^n omega_n(y, x)."""
    order = 5
    S = SymbolicResolvent(symbolic_operator(2), 2, 6, order - 1)
    for n in range(1, 7):
        coeffs = [S.jet(n, m) * gmpy2.mpq((-1) ** m, _fact(m)) for m in range(order)]
        jet = DiagJet(coeffs, order, DiffPoly())
        sign = -1 if n % 2 else 1
        assert jet.swapped() == jet * sign, n


def _fact(m):
    out = 1
    for i in range(2, m + 1):
        out *= i
    return out
