"""Points of Gr_0, their Baker functions, Krichever operators and dressing operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import gmpy2

from .exactalg import linalg
from .exactalg import poly as P
from .exactalg.poly import MPoly, R
from .exactalg.ratfunc import RatFunc
from .pdo import X_RING, Pdo, inverse, adjoint, mul, split

TIME_NAMES = tuple(f"s{i}" for i in range(1, P.MAX_TIMES + 1))


class GrPointError(ValueError):
    """Malformed or degenerate Grassmannian point."""


@dataclass(frozen=True)
class GrPoint:
    """A point of Gr_0 given by a polynomial tau function or by conditions at 0.

    In conditions mode each row ``[a0, a1, ...]`` is the functional
    g -> sum_m a_m g^(m)(0) and W = z^{-n} {g : all functionals vanish}.
    """

    mode: str
    tau: MPoly | None = None
    conditions: tuple[tuple["gmpy2.mpq", ...], ...] = ()
    N: int | None = None

    def __post_init__(self):
        if self.mode not in ("tau", "conditions"):
            raise GrPointError(f"unknown mode {self.mode!r}")
        if self.mode == "tau":
            if self.tau is None or not self.tau:
                raise GrPointError("tau function is identically zero")
            bad = P.used_variables(self.tau) - set(TIME_NAMES)
            if bad:
                raise GrPointError(f"tau may only involve s1..s{P.MAX_TIMES}, found {sorted(bad)}")
        else:
            if self.conditions:
                width = max(len(c) for c in self.conditions)
                rows = [list(c) + [gmpy2.mpq(0)] * (width - len(c)) for c in self.conditions]
                if linalg.rank(rows, gmpy2.mpq(0)) != len(rows):
                    raise GrPointError("conditions are linearly dependent")

    @property
    def n(self) -> int:
        return len(self.conditions)

    @classmethod
    def from_tau(cls, tau: str | MPoly, N: int | None = None) -> "GrPoint":
        if isinstance(tau, str):
            tau = P.parse_poly(tau)
        return cls("tau", tau=tau, N=N)

    @classmethod
    def from_conditions(cls, conditions: Sequence[Sequence], N: int | None = None) -> "GrPoint":
        rows = tuple(tuple(P.rat(a) for a in c) for c in conditions)
        return cls("conditions", conditions=rows, N=N)


def parse_grpoint(text: str) -> GrPoint:
    """Parse the line-oriented ``mode:/tau:/c:/N:`` format."""
    mode = None
    tau = None
    conds: list[list] = []
    N = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise GrPointError(f"line {lineno}: expected 'key: value'")
        key, value = (t.strip() for t in line.split(":", 1))
        try:
            if key == "mode":
                mode = value
            elif key == "tau":
                tau = P.parse_poly(value)
            elif key == "c":
                conds.append([P.rat(tok) for tok in value.split()])
            elif key == "N":
                N = int(value)
            else:
                raise GrPointError(f"line {lineno}: unknown key {key!r}")
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, GrPointError):
                raise
            raise GrPointError(f"line {lineno}: {exc}") from None
    if mode is None:
        mode = "tau" if tau is not None else "conditions"
    if mode == "tau":
        if conds:
            raise GrPointError("condition lines given in tau mode")
        if tau is None:
            raise GrPointError("tau mode needs a 'tau:' line")
        return GrPoint("tau", tau=tau, N=N)
    if tau is not None:
        raise GrPointError("'tau:' line given in conditions mode")
    return GrPoint.from_conditions(conds, N=N)


def load_grpoint(path: str | Path) -> GrPoint:
    return parse_grpoint(Path(path).read_text(encoding="utf-8"))


@dataclass
class WaveData:
    """Finite Baker data: Psi = (1 + sum psi_k z^-k) e^{xz}, Psi* likewise with e^{-xz}.

    ``tau_x`` is the polynomial whose product tau_x(x) tau_x(y) clears the
    denominators of the resolvent coefficients.
    """

    psi: list[RatFunc]
    psi_star: list[RatFunc]
    tau_x: RatFunc = field(default_factory=lambda: RatFunc(1))

    @property
    def m1(self) -> int:
        return len(self.psi)

    @property
    def m2(self) -> int:
        return len(self.psi_star)

    def full_psi(self) -> list[RatFunc]:
        return [RatFunc(1)] + list(self.psi)

    def full_psi_star(self) -> list[RatFunc]:
        return [RatFunc(1)] + list(self.psi_star)

    def vanishes_at_infinity(self) -> bool:
        return all(p.vanishes_at_infinity("x") for p in self.psi + self.psi_star)

    def subs(self, bindings: Mapping[str, object]) -> "WaveData":
        return WaveData(
            _trim([p.subs(bindings) for p in self.psi]),
            _trim([p.subs(bindings) for p in self.psi_star]),
            self.tau_x.subs(bindings),
        )


def _trim(values: list[RatFunc]) -> list[RatFunc]:
    while values and not values[-1]:
        values.pop()
    return values


# -- Sato formulas ------------------------------------------------------------------------
def _miwa_shift(tau: MPoly, sign: int) -> MPoly:
    """tau(s + sign*[w]) with [w] = (w, w^2/2, ...); the spare variable h plays w."""
    w = P.var("h")
    pairs = []
    for j, name in enumerate(TIME_NAMES, 1):
        if P.degree_in(tau, (name,)) > 0:
            pairs.append((P.var(name), P.var(name) + w ** j * gmpy2.mpq(sign, j)))
    return tau.compose(pairs) if pairs else tau


def _coefficients_in(p: MPoly, name: str) -> dict[int, MPoly]:
    i = P.INDEX[name]
    out: dict[int, dict] = {}
    for exps, c in p.items():
        e = list(exps)
        k = e[i]
        e[i] = 0
        out.setdefault(k, {})[tuple(e)] = c
    return {k: R(v) for k, v in out.items()}


def _specialize(p: MPoly, params: Mapping[str, object] | None, keep_params: bool) -> MPoly:
    """s1 -> x + s1, then bind (or zero) the remaining times."""
    x = P.var("x")
    p = p.compose([(P.var("s1"), x + P.var("s1"))])
    bind = {}
    for name in TIME_NAMES:
        if params and name in params:
            bind[name] = params[name]
        elif not keep_params:
            bind[name] = 0
    return P.substitute(p, bind)


def baker_from_tau(tau: MPoly | str, params: Mapping[str, object] | None = None,
                   keep_params: bool = False) -> WaveData:
    """Baker and adjoint Baker functions from a polynomial tau function."""
    if isinstance(tau, str):
        tau = P.parse_poly(tau)
    if not tau:
        raise GrPointError("tau function is identically zero")
    if P.degree_in(tau, ("x", "y", "h")) > 0:
        raise GrPointError("tau may only involve the times s1, s2, ...")
    base = _specialize(tau, params, keep_params)
    if not base:
        raise GrPointError("tau vanishes identically after specialization")
    out = []
    for sign in (-1, +1):
        shifted = _specialize(_miwa_shift(tau, sign), params, keep_params)
        coeffs = _coefficients_in(shifted, "h")
        top = max(coeffs)
        out.append(_trim([RatFunc(coeffs.get(k, R.zero), base) for k in range(1, top + 1)]))
    return WaveData(out[0], out[1], RatFunc(base))


def _condition_value(row: Sequence, p: int):
    """<c, z^p e^{xz}> = sum_m a_m m!/(m-p)! x^(m-p) as a polynomial in x."""
    x = P.var("x")
    total = R.zero
    for m, a in enumerate(row):
        if a and m >= p:
            fall = 1
            for t in range(m - p + 1, m + 1):
                fall *= t
            total += R(a * fall) * x ** (m - p)
    return total


def baker_from_conditions(point: GrPoint) -> WaveData:
    """Psi from the conditions by Cramer's rule; Psi* from inverting the dressing operator."""
    if point.mode != "conditions":
        raise GrPointError("baker_from_conditions needs a conditions-mode point")
    n = point.n
    if n == 0:
        return WaveData([], [], RatFunc(1))
    # unknown q = z^n + sum_{p<n} Q_p z^p; condition i: sum_p Q_p <c_i, z^p e^{xz}> = -<c_i, z^n e^{xz}>
    mat = [[RatFunc(_condition_value(row, p)) for p in range(n)] for row in point.conditions]
    rhs = [-RatFunc(_condition_value(row, n)) for row in point.conditions]
    det = linalg.determinant(mat, RatFunc(), RatFunc(1))
    if not det:
        raise GrPointError("degenerate condition system (determinant vanishes identically)")
    q = linalg.solve(mat, rhs, RatFunc())
    psi = _trim([q[n - k] for k in range(1, n + 1)])
    # det is a polynomial in x; scale it monic so the printed form is canonical
    tau_x = RatFunc(det.num.quo_ground(det.num.LC), det.den.quo_ground(det.den.LC))
    dmax = max(len(row) - 1 for row in point.conditions)
    psi_star = dual_coefficients_from_dressing(psi, max(dmax + 1 - n, 0))
    return WaveData(psi, psi_star, tau_x)


def dual_coefficients_from_dressing(psi: Sequence[RatFunc], m2_bound: int) -> list[RatFunc]:
    """psi*_k from (S*)^{-1} = sum_k (-1)^k psi*_k D^{-k} with S = 1 + sum psi_k D^-k."""
    S = Pdo({0: RatFunc(1), **{-k: c for k, c in enumerate(psi, 1)}}, X_RING)
    floor = -(m2_bound + 2)
    S = S.with_floor(floor)
    Sinv_adj = inverse(adjoint(S), floor)
    out = []
    for k in range(1, m2_bound + 3):
        c = Sinv_adj[-k] * (-1 if k % 2 else 1)
        out.append(c)
    tail = out[m2_bound:]
    if any(tail):
        raise GrPointError("adjoint Baker function is longer than the condition bound allows")
    return _trim(out[:m2_bound])


def baker(point: GrPoint, params: Mapping[str, object] | None = None,
          keep_params: bool = False) -> WaveData:
    if point.mode == "tau":
        return baker_from_tau(point.tau, params=params, keep_params=keep_params)
    return baker_from_conditions(point)


def dual_wave(wave: WaveData) -> WaveData:
    """Wave data of (-1)^N L*: Psi~(x,z) = Psi*(x,-z) and Psi~*(x,z) = Psi(x,-z)."""
    sgn = lambda k: -1 if k % 2 else 1  # noqa: E731
    return WaveData(
        [c * sgn(k) for k, c in enumerate(wave.psi_star, 1)],
        [c * sgn(k) for k, c in enumerate(wave.psi, 1)],
        wave.tau_x,
    )


# -- Krichever map ------------------------------------------------------------------------------
@dataclass
class KricheverResult:
    operator: Pdo      # full K, exact down to its floor
    differential: Pdo  # K_+
    volterra: Pdo      # K_- (zero iff f leaves W invariant)

    @property
    def is_differential(self) -> bool:
        return not self.volterra


def _poly_in_z(f: Sequence | Mapping[int, object] | int) -> dict[int, RatFunc]:
    if isinstance(f, int):
        return {f: RatFunc(1)}
    if isinstance(f, Mapping):
        items = f.items()
    else:
        items = enumerate(f)
    return {int(i): RatFunc.constant(P.rat(c)) if not isinstance(c, RatFunc) else c
            for i, c in items if c}


def krichever_operator(wave: WaveData, f, floor: int | None = None) -> KricheverResult:
    """K = sum_{k,j} psi_k f(D) D^{-k-j} psi*_j; ``f`` is a power (int) or coefficient list."""
    fz = _poly_in_z(f)
    order = max(fz) if fz else 0
    if floor is None:
        floor = -3 * max(order, 1)
    total = Pdo({}, X_RING, floor)
    for k, pk in enumerate(wave.full_psi()):
        for j, pj in enumerate(wave.full_psi_star()):
            left = Pdo({i - k - j: pk * c for i, c in fz.items()}, X_RING)
            total = total + mul(left, Pdo.scalar(pj, X_RING), floor)
    plus, minus = split(total)
    return KricheverResult(total, plus, minus)


def eigen_check(wave: WaveData, K: Pdo, f) -> bool:
    """Exact check of K(phi e^{xz}) = f(z) phi e^{xz} for phi = 1 + sum psi_k z^-k."""
    if not K.is_differential():
        return False
    fz = _poly_in_z(f)
    phi = {-k: c for k, c in enumerate(wave.full_psi())}
    lhs: dict[int, RatFunc] = {}
    # e^{-xz} K e^{xz} = sum_i k_i (D + z)^i acting on phi
    for i, ki in K.coeffs.items():
        for r in range(i + 1):
            b = _binomial(i, r)
            # D^{i-r} phi z^r
            for p, c in phi.items():
                d = c.diff("x", i - r)
                if d:
                    lhs[p + r] = lhs.get(p + r, RatFunc()) + ki * d * b
    rhs: dict[int, RatFunc] = {}
    for i, c in fz.items():
        for p, v in phi.items():
            rhs[p + i] = rhs.get(p + i, RatFunc()) + c * v
    keys = set(lhs) | set(rhs)
    return all(lhs.get(k, RatFunc()) == rhs.get(k, RatFunc()) for k in keys)


def _binomial(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def check_invariance(point: GrPoint, N: int, params: Mapping[str, object] | None = None) -> bool:
    """Is W invariant under multiplication by z^N?"""
    if point.mode == "conditions":
        if not point.conditions:
            return True
        width = max(len(c) for c in point.conditions)
        base = [list(c) + [gmpy2.mpq(0)] * (width - len(c)) for c in point.conditions]
        r0 = linalg.rank(base, gmpy2.mpq(0))
        for row in base:
            # <c, z^N g> = sum_m a_m m!/(m-N)! g^(m-N)(0)
            moved = [gmpy2.mpq(0)] * width
            for m, a in enumerate(row):
                if a and m >= N:
                    fall = 1
                    for t in range(m - N + 1, m + 1):
                        fall *= t
                    moved[m - N] += a * fall
            if any(moved) and linalg.rank(base + [moved], gmpy2.mpq(0)) != r0:
                return False
        return True
    wave = baker(point, params=params)
    return krichever_operator(wave, N).is_differential


# -- dressing operator ---------------------------------------------------------------------------
@dataclass
class DressingResult:
    V: Pdo
    intertwines: bool                # L V - V D^N == 0 exactly
    kernel: list[RatFunc] | None     # polynomial kernel basis, None if the search failed
    nilpotent: bool                  # D^{N m1} kills every kernel element
    degree_bound: int


def dressing_operator(wave: WaveData, N: int, degree_bound: int | None = None) -> DressingResult:
    m1 = wave.m1
    V = Pdo({m1 - k: c for k, c in enumerate(wave.full_psi())}, X_RING)
    L = krichever_operator(wave, N).differential
    lhs = mul(L, V) - mul(V, Pdo.D(N, X_RING))
    intertwines = not lhs
    if degree_bound is None:
        degree_bound = m1 + sum(P.degree_in(p.num, ("x",)) + P.degree_in(p.den, ("x",))
                                for p in wave.psi)
    kernel = polynomial_kernel(V, degree_bound)
    ok = kernel is not None and len(kernel) == m1
    nil = ok and all(not p.diff("x", N * m1) for p in kernel)
    return DressingResult(V, intertwines, kernel if ok else None, nil, degree_bound)


def polynomial_kernel(V: Pdo, degree_bound: int) -> list[RatFunc] | None:
    """Basis of polynomial (in x) solutions of V p = 0 with deg p <= degree_bound."""
    if not V.is_differential():
        raise ValueError("kernel search needs a differential operator")
    x = P.var("x")
    dens = [c.den for c in V.coeffs.values()]
    common = dens[0]
    for d in dens[1:]:
        common = common.lcm(d)
    columns = []
    for deg in range(degree_bound + 1):
        mono = x ** deg
        col = R.zero
        for i, c in V.coeffs.items():
            num = c.num * common.quo(c.den) if not c.den.is_ground else c.num * common.quo_ground(c.den.LC)
            col += num * _poly_derivative(mono, i)
        columns.append(_coefficients_in(col, "x"))
    rows_idx = sorted({e for col in columns for e in col})
    mat = [[RatFunc(col.get(e, R.zero)) for col in columns] for e in rows_idx]
    basis = linalg.nullspace(mat, degree_bound + 1, RatFunc(), RatFunc(1))
    out = []
    for vec in basis:
        p = RatFunc()
        for deg, a in enumerate(vec):
            if a:
                p = p + a * RatFunc(x ** deg)
        out.append(p)
    return out


def _poly_derivative(p: MPoly, times: int) -> MPoly:
    x = P.var("x")
    for _ in range(times):
        p = p.diff(x)
    return p
