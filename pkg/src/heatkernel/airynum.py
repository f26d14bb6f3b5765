"""Airy-type functions A_N(z; kappa), their ODE, and numeric assembly of finite heat kernels."""
from __future__ import annotations

import cmath
import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from scipy import integrate

from .exactalg.ratfunc import RatFunc, X, Y
from .hadamard import HadamardTable, check_kappa
from .pdo import Pdo


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class PoleProximityError(ValueError):
    """Sample point too close to a pole of a Hadamard coefficient."""


@dataclass(frozen=True)
class AiryEvalConfig:
    N: int
    kappa: int
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    contour_shift: float | None = None   # odd N only; None picks the default per z
    max_radius: float = 1e3
    max_subdivisions: int = 2000

    def __post_init__(self):
        check_kappa(self.N, self.kappa)
        c = self.contour_shift
        if c is not None:
            if self.N % 2 == 0:
                raise ValueError("a contour shift only applies to odd N")
            if c == 0 or (c > 0) != (self.shift_sign > 0):
                raise ValueError(f"contour shift must have sign {self.shift_sign:+d} for N = {self.N}, "
                                 f"kappa = {self.kappa:+d}")

    @property
    def shift_sign(self) -> int:
        """+1 when kappa = (-1)^{(N+1)/2}, else -1 (odd N)."""
        return 1 if self.kappa == (-1) ** ((self.N + 1) // 2) else -1

    def shift_for(self, z: float) -> float:
        """Contour abscissa: the candidate minimizing the peak of Re(z xi + kappa xi^N) on the line."""
        if self.contour_shift is not None:
            return self.contour_shift
        s = self.shift_sign
        scale = max(1.0, abs(z) ** (1.0 / (self.N - 1)))
        cands = [s * scale] + [s * a for a in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)]
        return min(cands, key=lambda c: (_peak_exponent(self.N, self.kappa, z, c), -abs(c)))

    def with_kappa(self, kappa: int) -> "AiryEvalConfig":
        shift = None if self.contour_shift is None else abs(self.contour_shift)
        cfg = AiryEvalConfig(self.N, kappa, self.abs_tol, self.rel_tol, None,
                             self.max_radius, self.max_subdivisions)
        if shift is not None:
            cfg = AiryEvalConfig(self.N, kappa, self.abs_tol, self.rel_tol, cfg.shift_sign * shift,
                                 self.max_radius, self.max_subdivisions)
        return cfg


def _peak_exponent(N: int, kappa: int, z: float, c: float) -> float:
    """max over u >= 0 of Re(z xi + kappa xi^N), xi = c + iu, sampled until it decays."""
    best = -math.inf
    u = 0.0
    while u < 64.0:
        xi = complex(c, u)
        e = (z * xi + kappa * xi ** N).real
        best = max(best, e)
        if u > 1 and e < best - 60:
            break
        u += 0.05
    return best


def _truncation(envelope, cfg: AiryEvalConfig) -> float:
    """Radius past which envelope(u) * u is below a small fraction of abs_tol."""
    R = 2.0
    target = 1e-3 * cfg.abs_tol
    while R <= cfg.max_radius:
        if envelope(R) * R < target and envelope(2 * R) <= envelope(R):
            return R
        R *= 1.5
    raise QuadratureError(f"integrand does not decay within radius {cfg.max_radius}")


def _quad(f, a: float, b: float, cfg: AiryEvalConfig) -> tuple[float, float]:
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimate instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=0.1 * cfg.abs_tol, epsrel=0.1 * cfg.rel_tol,
                                  limit=cfg.max_subdivisions)
    return val, err


def airy_eval_with_error(cfg: AiryEvalConfig, z: float, j: int = 0) -> tuple[float, float]:
    if j < 0:
        raise ValueError("derivative order must be non-negative")
    N = cfg.N
    if N % 2 == 0:
        # (1/pi) int_0^inf s^j cos(z s + j pi/2) exp(-s^N) ds
        phase = j * math.pi / 2

        def env(s: float) -> float:
            return s ** j * math.exp(-s ** N)

        R = _truncation(env, cfg)
        val, err = _quad(lambda s: s ** j * math.cos(z * s + phase) * math.exp(-s ** N), 0.0, R, cfg)
        tail = env(R) * R
        val, err = val / math.pi, (err + tail) / math.pi
    else:
        # (1/pi) int_0^inf Re[exp(z xi + kappa xi^N) xi^j] du on xi = c + iu
        c = cfg.shift_for(z)
        kap = cfg.kappa

        def g(u: float) -> complex:
            xi = complex(c, u)
            return cmath.exp(z * xi + kap * xi ** N) * xi ** j

        def env(u: float) -> float:
            return abs(g(u))

        R = _truncation(env, cfg)
        val, err = _quad(lambda u: g(u).real, 0.0, R, cfg)
        tail = env(R) * R
        val, err = val / math.pi, (err + tail) / math.pi
    if not math.isfinite(val) or err > max(cfg.abs_tol, cfg.rel_tol * abs(val)):
        raise QuadratureError(f"A_{N}^({j})({z}) did not converge (error estimate {err:.3g})")
    return val, err


def airy_eval(cfg: AiryEvalConfig, z: float, j: int = 0) -> float:
    """A_N^{(j)}(z; kappa) by adaptive quadrature."""
    return airy_eval_with_error(cfg, z, j)[0]


def airy_ode_residual(cfg: AiryEvalConfig, z: float) -> float:
    """A^{(N-1)}(z) + (kappa/N) z A(z), zero for the exact function."""
    return airy_eval(cfg, z, cfg.N - 1) + cfg.kappa / cfg.N * z * airy_eval(cfg, z, 0)


def gaussian_a2(z: float) -> float:
    return math.exp(-z * z / 4) / math.sqrt(4 * math.pi)


# -- independent Ai oracle ----------------------------------------------------------------------------
def ai_series(x: float, deriv: int = 0, precision: int = 200) -> float:
    """Ai or Ai' from the Maclaurin series of Ai'' = x Ai, in multiprecision.

    a_0 = 1/(3^{2/3} Gamma(2/3)), a_1 = -1/(3^{1/3} Gamma(1/3)), a_2 = 0,
    a_{n+3} = a_n / ((n+3)(n+2)).
    """
    if deriv not in (0, 1):
        raise ValueError("only Ai and Ai' are available")
    with gmpy2.context(precision=precision):
        three = gmpy2.mpfr(3)
        a = [1 / (three ** (gmpy2.mpfr(2) / 3) * gmpy2.gamma(gmpy2.mpfr(2) / 3)),
             -1 / (three ** (gmpy2.mpfr(1) / 3) * gmpy2.gamma(gmpy2.mpfr(1) / 3)),
             gmpy2.mpfr(0)]
        xm = gmpy2.mpfr(x)
        eps = gmpy2.mpfr(2) ** (-precision + 8)
        total = gmpy2.mpfr(0)
        n = 0
        small = 0
        while True:
            if n >= len(a):
                a.append(a[n - 3] / ((n) * (n - 1)))
            if deriv == 0:
                term = a[n] * xm ** n
            else:
                term = (a[n] * n * xm ** (n - 1)) if n else gmpy2.mpfr(0)
            total += term
            small = small + 1 if abs(term) < eps else 0
            if small >= 3 and n > 3 * abs(x) ** 1.5 + 10:
                break
            n += 1
        return float(total)


def a3_via_ai(z: float, kappa: int = 1) -> float:
    """A_3(z; 1) = 3^{-1/3} Ai(-z / 3^{1/3}); A_3(z; -1) = A_3(-z; 1)."""
    s = 3 ** (1 / 3)
    z = z if kappa == 1 else -z
    return ai_series(-z / s) / s


# -- kernel assembly -----------------------------------------------------------------------------------
# A kernel is a sum of terms t^a A^{(i)}(w) c(x, y) with w = (x - y) t^{-1/N}; stored as
# {(a, i): c} with a a Fraction and c a RatFunc.
Terms = dict[tuple[Fraction, int], RatFunc]


def _add(terms: Terms, key: tuple[Fraction, int], c: RatFunc) -> None:
    if not c:
        return
    prev = terms.get(key)
    s = c if prev is None else prev + c
    if s:
        terms[key] = s
    else:
        terms.pop(key, None)


def kernel_terms(table: HadamardTable) -> Terms:
    """t^{-(j+1)/N} A^{(j)}(w) (delta_{j0} + sum_k H_k^j t^k)."""
    if table.mode != "exact" or not table.finite:
        raise ValueError("kernel assembly needs an exact, finite Hadamard table")
    N = table.N
    terms: Terms = {}
    _add(terms, (Fraction(-1, N), 0), RatFunc(1))
    for (k, j), H in table.entries.items():
        _add(terms, (Fraction(k) - Fraction(j + 1, N), j), H)
    return terms


def _reduce(terms: Terms, N: int, kappa: int) -> Terms:
    """Rewrite A^{(i)}, i >= N-1, via A^{(N-1+r)} = -(kappa/N)(w A^{(r)} + r A^{(r-1)})."""
    out: Terms = {}
    stack = list(terms.items())
    h = X - Y
    while stack:
        (a, i), c = stack.pop()
        if i < N - 1:
            _add(out, (a, i), c)
            continue
        r = i - (N - 1)
        f = RatFunc.constant(gmpy2.mpq(-kappa, N))
        stack.append(((a - Fraction(1, N), r), c * h * f))
        if r:
            stack.append(((a, r - 1), c * f * r))
    return out


def _dt(terms: Terms, N: int) -> Terms:
    out: Terms = {}
    h = X - Y
    for (a, i), c in terms.items():
        if a:
            _add(out, (a - 1, i), c * gmpy2.mpq(a.numerator, a.denominator))
        _add(out, (a - 1 - Fraction(1, N), i + 1), c * h * gmpy2.mpq(-1, N))
    return out


def _dx(terms: Terms, N: int) -> Terms:
    out: Terms = {}
    for (a, i), c in terms.items():
        _add(out, (a - Fraction(1, N), i + 1), c)
        _add(out, (a, i), c.diff("x"))
    return out


def residual_sides(table: HadamardTable, operator: Pdo, kappa: int,
                   reduce_airy: bool = True) -> tuple[Terms, Terms]:
    """(d_t H, kappa L H) as term sums; ``operator`` has leading coefficient +-1.

    With ``reduce_airy`` every A^{(i)} is brought to i <= N-2 through the Airy
    equation; otherwise higher derivatives are left for direct quadrature.
    """
    N = table.N
    keff = kappa * _leading_sign(operator, N)
    red = (lambda ts: _reduce(ts, N, keff)) if reduce_airy else (lambda ts: ts)
    base = kernel_terms(table)
    lhs = red(_dt(base, N))
    rhs: Terms = {}
    deriv = base
    for d in range(N + 1):
        if d:
            deriv = red(_dx(deriv, N))
        coeff = operator[d]
        if coeff:
            for key, c in deriv.items():
                _add(rhs, key, c * coeff * kappa)
    return lhs, rhs


def _leading_sign(operator: Pdo, N: int) -> int:
    lead = operator[N] if operator.top == N else None
    if lead is None or not lead.is_constant or abs(lead.constant_value()) != 1:
        raise ValueError("operator must have order N and leading coefficient +-1")
    return int(lead.constant_value())


@dataclass
class KernelSample:
    x: float
    y: float
    t: float
    value: float
    residual: float


class KernelEvaluator:
    """Numeric evaluation of a finite kernel and of its PDE residual."""

    def __init__(self, table: HadamardTable, operator: Pdo, cfg: AiryEvalConfig,
                 pole_threshold: float = 1e-8, reduce_airy: bool = True):
        N = table.N
        if cfg.N != N:
            raise ValueError("config and table disagree on N")
        self.N = N
        lead = _leading_sign(operator, N)
        self.kappa = cfg.kappa
        # A_N belongs to d/dt = (kappa * lead) D^N
        self.acfg = cfg.with_kappa(cfg.kappa * lead) if lead != 1 else cfg
        self.pole_threshold = pole_threshold
        value = kernel_terms(table)
        lhs, rhs = residual_sides(table, operator, cfg.kappa, reduce_airy)
        self._orders = sorted({i for ts in (value, lhs, rhs) for (_, i) in ts})
        self._value = self._compile(value)
        self._lhs = self._compile(lhs)
        self._rhs = self._compile(rhs)
        dens = {H.den for H in table.entries.values() if H}
        self._dens = [RatFunc(d).to_callable(("x", "y")) for d in dens]
        for d in dens:
            extra = set(RatFunc(d).variables()) - {"x", "y"}
            if extra:
                raise ValueError(f"unbound parameters {sorted(extra)} in the Hadamard table")

    @staticmethod
    def _compile(terms: Terms):
        return [(float(a), i, c.to_callable(("x", "y"))) for (a, i), c in sorted(terms.items())]

    def _eval(self, compiled, x: float, y: float, t: float, avals: dict[int, float]) -> float:
        return sum(t ** a * avals[i] * f(x, y) for a, i, f in compiled)

    def sample(self, x: float, y: float, t: float) -> KernelSample:
        if t <= 0:
            raise ValueError("t must be positive")
        for d in self._dens:
            if abs(d(x, y)) < self.pole_threshold:
                raise PoleProximityError(f"({x}, {y}) is within {self.pole_threshold} of a pole")
        w = (x - y) * t ** (-1.0 / self.N)
        avals = {i: airy_eval(self.acfg, w, i) for i in self._orders}
        value = self._eval(self._value, x, y, t, avals)
        res = self._eval(self._lhs, x, y, t, avals) - self._eval(self._rhs, x, y, t, avals)
        return KernelSample(x, y, t, value, res)


def kernel_assemble(table: HadamardTable, cfg: AiryEvalConfig, x: float, y: float, t: float,
                    operator: Pdo, reduce_airy: bool = True) -> KernelSample:
    return KernelEvaluator(table, operator, cfg, reduce_airy=reduce_airy).sample(x, y, t)


DEFAULT_XY = (-2.0, -1.0, 0.0, 1.0, 2.0)
DEFAULT_T = (0.1, 0.5, 1.0)


def kernel_grid(table: HadamardTable, operator: Pdo, cfg: AiryEvalConfig,
                xs: Sequence[float] = DEFAULT_XY, ys: Sequence[float] = DEFAULT_XY,
                ts: Sequence[float] = DEFAULT_T, reduce_airy: bool = True) -> list[KernelSample]:
    ev = KernelEvaluator(table, operator, cfg, reduce_airy=reduce_airy)
    return [ev.sample(x, y, t) for x in xs for y in ys for t in ts]


def samples_to_csv(samples: Iterable[KernelSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "t", "value", "residual"])
    for s in samples:
        w.writerow([f"{v:.17g}" for v in (s.x, s.y, s.t, s.value, s.residual)])
    return buf.getvalue()
