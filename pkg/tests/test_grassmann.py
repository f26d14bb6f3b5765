import pytest

import oracles as o
from conftest import DATA, EX71_TAU, ex71_wave
from heatkernel.exactalg.ratfunc import RatFunc
from heatkernel.grassmann import (GrPoint, GrPointError, baker, baker_from_tau, check_invariance,
                                  dressing_operator, dual_wave, eigen_check, krichever_operator,
                                  load_grpoint, parse_grpoint)
from heatkernel.pdo import X_RING, Pdo

ZERO_S = {"s1": 0, "s2": 0}


def test_trivial_tau():
    w = baker_from_tau("1")
    assert w.psi == [] and w.psi_star == []


def test_example_baker_functions():
    w = ex71_wave()
    assert w.psi == [o.rf(e) for e in o.PSI]
    assert w.psi_star == [o.rf(e) for e in o.PSI_STAR]
    assert w.tau_x == o.rf(o.tau(o.x))


def test_tau_s1():
    assert baker_from_tau("s1").psi == [RatFunc("-1/x")]


def test_params_bind_exactly():
    w = baker_from_tau(EX71_TAU, params={"s1": 0, "s2": 1})
    assert w.psi == [RatFunc("-2*x/(x^2 + 2)")]


def test_conditions_empty():
    w = baker(GrPoint.from_conditions([]))
    assert w.psi == [] and w.psi_star == []


def test_conditions_example():
    w = baker(load_grpoint(DATA / "ex71_conditions.gr"))
    assert w.psi == [RatFunc("-2/x")]


def test_single_condition_at_zero_is_trivial():
    # g(0) = 0 gives W = z^{-1} z H_+ = H_+
    assert baker(GrPoint.from_conditions([[1]])).psi == []


def test_single_derivative_condition():
    assert baker(GrPoint.from_conditions([[0, 1]])).psi == [RatFunc("-1/x")]


def test_conditions_and_tau_agree():
    by_tau = baker(GrPoint.from_tau(EX71_TAU))
    by_cond = baker(load_grpoint(DATA / "ex71_conditions.gr"))
    assert by_tau.psi == by_cond.psi
    assert by_tau.psi_star == by_cond.psi_star


@pytest.mark.parametrize("mode", ["tau", "conditions"])
@pytest.mark.parametrize("N,expected", [(2, False), (3, True), (4, True), (5, True)])
def test_invariance(mode, N, expected):
    point = load_grpoint(DATA / ("ex71.gr" if mode == "tau" else "ex71_conditions.gr"))
    assert check_invariance(point, N) is expected


def test_krichever_trivial():
    for N in (2, 3, 4):
        K = krichever_operator(baker_from_tau("1"), N)
        assert K.differential == Pdo.D(N, X_RING) and K.is_differential


def test_krichever_example():
    L = krichever_operator(ex71_wave(), 3)
    assert L.is_differential
    assert L.differential.degrees() == [3, 1, 0]
    assert L.differential[1] == o.rf(o.U1)
    assert L.differential[0] == o.rf(o.U0)


def test_krichever_detects_non_invariance():
    assert not krichever_operator(ex71_wave(), 1).is_differential
    assert not krichever_operator(ex71_wave(), 2).is_differential


def test_eigen_relation():
    w = ex71_wave()
    for N in (3, 4):
        assert eigen_check(w, krichever_operator(w, N).differential, N)
    L = krichever_operator(w, 3).differential
    assert not eigen_check(w, L, 4)


@pytest.mark.parametrize("tau,N", [(EX71_TAU, 3), (EX71_TAU, 4), ("s1", 2), ("s1^3/3 - s3", 2),
                                   ("s1^3/3 - s3", 5), ("1", 3)])
def test_krichever_operator_shape(tau, N):
    K = krichever_operator(baker_from_tau(tau), N).differential
    assert K.is_monic(N) and not K[N - 1]


def test_dressing_trivial():
    r = dressing_operator(baker_from_tau("1"), 3)
    assert r.V == Pdo.D(0, X_RING) and r.intertwines


def test_dressing_example():
    w = ex71_wave()
    r = dressing_operator(w, 3)
    assert r.V == Pdo({1: RatFunc(1), 0: o.rf(-(o.s1 + o.x) / o.tau(o.x))}, X_RING)
    assert r.intertwines and r.nilpotent
    assert len(r.kernel) == 1
    assert (r.kernel[0] / o.rf(o.tau(o.x))).is_constant


def test_waves_vanish_at_infinity():
    for tau in (EX71_TAU, "s1", "s1^3/3 - s3", "s1^2/2 - s2"):
        assert baker_from_tau(tau, keep_params=True).vanishes_at_infinity()


def test_dual_wave_matches_dual_tau():
    # the dual point has tau s1^2/2 - s2 with the even times negated
    dual = dual_wave(ex71_wave())
    from_tau = baker_from_tau("s1^2/2 - s2", keep_params=True)
    flip = lambda cs: [c.compose("s2", RatFunc("-s2")) for c in cs]  # noqa: E731
    assert dual.psi == flip(from_tau.psi) and dual.psi_star == flip(from_tau.psi_star)


def test_dual_wave_matches_dual_conditions():
    dual = dual_wave(ex71_wave().subs(ZERO_S))
    by_cond = baker(GrPoint.from_conditions([[0, 1], [0, 0, 1]]))
    assert dual.psi == by_cond.psi and dual.psi_star == by_cond.psi_star


def test_dual_wave_is_involutive():
    w = ex71_wave()
    back = dual_wave(dual_wave(w))
    assert back.psi == w.psi and back.psi_star == w.psi_star


def test_file_format(data_dir):
    p = load_grpoint(data_dir / "ex71.gr")
    assert p.mode == "tau" and p.N == 3
    q = parse_grpoint("# comment\nc: 0 0 1\n")
    assert q.mode == "conditions" and q.n == 1


@pytest.mark.parametrize("text", [
    "tau: s1 +", "tau: 0", "tau: x + s1", "mode: tau\n", "bogus: 1", "c: 1 0\nc: 2 0",
    "mode: tau\ntau: s1\nc: 1", "mode: nope\ntau: s1", "c: 1/0",
])
def test_malformed_points(text):
    with pytest.raises(GrPointError):
        parse_grpoint(text)


def test_bad_file(data_dir):
    with pytest.raises(GrPointError):
        load_grpoint(data_dir / "bad.gr")
