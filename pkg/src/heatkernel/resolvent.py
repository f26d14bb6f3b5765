"""Resolvent coefficients omega_n(x, y): exact for finite wave data, as diagonal jets symbolically."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .exactalg.ratfunc import RatFunc
from .grassmann import WaveData
from .pdo import Pdo, binom, mul, nth_root


@dataclass
class ResolventTable:
    """omega_0..omega_{len-1}; entries past ``vanishing_index`` are identically zero."""

    omega: list[RatFunc]
    vanishing_index: int | None
    tau_x: RatFunc = field(default_factory=lambda: RatFunc(1))

    def __getitem__(self, n: int) -> RatFunc:
        if n < len(self.omega):
            return self.omega[n]
        if self.vanishing_index is not None and n >= self.vanishing_index:
            return RatFunc()
        raise IndexError(f"omega_{n} was not computed")

    def nonzero_indices(self) -> list[int]:
        return [n for n, w in enumerate(self.omega) if w]

    def render(self) -> str:
        return "\n".join(f"omega[{n}] = {w}" for n, w in enumerate(self.omega)) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "omega": [str(w) for w in self.omega],
            "vanishingIndex": self.vanishing_index,
        }, indent=2) + "\n"


def res_exact(wave: WaveData, n_max: int | None = None) -> ResolventTable:
    """omega_n(x, y) = sum_{k+j=n} psi_k(x) psi*_j(y)."""
    a = wave.full_psi()
    b = [p.rename("x", "y") for p in wave.full_psi_star()]
    vanish = wave.m1 + wave.m2 + 1
    top = vanish - 1 if n_max is None else n_max
    omega = []
    for n in range(top + 1):
        total = RatFunc()
        for k in range(max(0, n - len(b) + 1), min(n, len(a) - 1) + 1):
            total = total + a[k] * b[n - k]
        omega.append(total)
    return ResolventTable(omega, vanish, wave.tau_x)


def check_duality(table: ResolventTable, dual: ResolventTable) -> bool:
    """omega_n(x, y) == (-1)^n omega~_n(y, x) for every n."""
    if len(table.omega) != len(dual.omega):
        raise ValueError("resolvent tables of unequal length")
    for n, (w, wd) in enumerate(zip(table.omega, dual.omega)):
        swapped = wd.swap("x", "y")
        if w != (-swapped if n % 2 else swapped):
            return False
    return True


class SymbolicResolvent:
    """Diagonal jets d_y^m omega_n(x, y)|_{y=x} of a monic operator with zero D^{N-1} term.

    Uses omega-jets = sum_p binom(m, p) (-1)^p res(P^{n-1+m-p} D^p) with P = L^{1/N};
    the root and its powers are computed once, deep enough for n <= n_max, m <= m_max.
    """

    def __init__(self, L: Pdo, N: int, n_max: int, m_max: int = 0):
        if not L.is_monic(N):
            raise ValueError(f"operator is not monic of order {N}")
        if L[N - 1]:
            raise ValueError("operator must have zero D^(N-1) coefficient")
        self.L, self.N, self.ring = L, N, L.ring
        self.n_max, self.m_max = n_max, m_max
        q_max = n_max - 1 + m_max
        # P^q is needed down to D^{-1-p_max(q)} with p_max(q) = min(m_max, q_max - q)
        need = {q: -1 - min(m_max, q_max - q) for q in range(q_max + 1)}
        floors = {}
        running = 0
        for q in range(q_max, 0, -1):
            running = min(need[q], running - 1) if q < q_max else need[q]
            floors[q] = running
        self.powers: dict[int, Pdo] = {0: Pdo.D(0, self.ring)}
        if q_max >= 1:
            self.root = nth_root(L, N, floors[1])
            self.powers[1] = self.root
            for q in range(2, q_max + 1):
                self.powers[q] = mul(self.powers[q - 1], self.root, floors[q])
        else:
            self.root = nth_root(L, N, -1)
        self._cache: dict[tuple[int, int], Any] = {}

    def power_residue(self, q: int, p: int = 0) -> Any:
        """res(P^q D^p), the coefficient of D^{-1-p} in P^q."""
        Pq = self.powers.get(q)
        if Pq is None or (Pq.floor is not None and -1 - p < Pq.floor):
            raise ValueError(f"res(P^{q} D^{p}) lies outside the prepared range; insufficient floor")
        return Pq[-1 - p]

    def diag_residue(self, m: int) -> Any:
        """res L^{m/N} = omega_{m+1}(x, x)."""
        return self.power_residue(m, 0)

    def jet(self, n: int, m: int = 0) -> Any:
        if n < 1 or m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if n > self.n_max or m > self.m_max:
            raise ValueError(f"(n, m) = ({n}, {m}) exceeds the prepared range "
                             f"(n <= {self.n_max}, m <= {self.m_max}); insufficient floor")
        key = (n, m)
        if key not in self._cache:
            total = self.ring.zero()
            for p in range(m + 1):
                c = binom(m, p) * (-1 if p % 2 else 1)
                r = self.power_residue(n - 1 + m - p, p)
                if r:
                    total = total + r * c
            self._cache[key] = total
        return self._cache[key]


def res_diag_jet(L: Pdo, N: int, n: int, m: int = 0) -> Any:
    return SymbolicResolvent(L, N, n, m).jet(n, m)


def exact_jets(table: ResolventTable, n: int, m_max: int) -> list[RatFunc]:
    """d_y^m omega_n(x, y) at y = x for m = 0..m_max, from an exact table."""
    from .exactalg.ratfunc import X

    out = []
    w = table[n]
    for _ in range(m_max + 1):
        out.append(w.compose("y", X) if "y" in w.variables() else w)
        w = w.diff("y")
    return out
