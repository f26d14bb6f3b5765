"""Gaussian elimination over an exact field (mpq or RatFunc entries)."""
from __future__ import annotations

from typing import Any, Sequence

Matrix = list[list[Any]]


def _copy(rows: Sequence[Sequence[Any]]) -> Matrix:
    return [list(r) for r in rows]


def _pivot_key(v) -> int:
    # prefer short entries so RatFunc fill-in stays small
    if hasattr(v, "num"):
        return len(v.num) + len(v.den)
    return 0


def row_echelon(rows: Sequence[Sequence[Any]], zero: Any) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the pivot columns."""
    a = _copy(rows)
    if not a:
        return a, []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        cands = [i for i in range(r, len(a)) if a[i][c]]
        if not cands:
            continue
        p = min(cands, key=lambda i: _pivot_key(a[i][c]))
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c] if not hasattr(a[r][c], "inverse") else a[r][c].inverse()
        a[r] = [v * inv if v else v for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [vi - f * vr if vr else vi for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def rank(rows: Sequence[Sequence[Any]], zero: Any) -> int:
    return len(row_echelon(rows, zero)[1])


def nullspace(rows: Sequence[Sequence[Any]], ncols: int, zero: Any, one: Any) -> list[list[Any]]:
    """Basis of {v : rows . v = 0}."""
    if not rows:
        return [[one if i == j else zero for i in range(ncols)] for j in range(ncols)]
    red, pivots = row_echelon(rows, zero)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][f]
        basis.append(v)
    return basis


def determinant(rows: Sequence[Sequence[Any]], zero: Any, one: Any) -> Any:
    a = _copy(rows)
    n = len(a)
    det = one
    for c in range(n):
        cands = [i for i in range(c, n) if a[i][c]]
        if not cands:
            return zero
        p = min(cands, key=lambda i: _pivot_key(a[i][c]))
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        piv = a[c][c]
        det = det * piv
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] / piv
                a[i] = [vi - f * vc for vi, vc in zip(a[i], a[c])]
    return det


def solve(rows: Sequence[Sequence[Any]], rhs: Sequence[Any], zero: Any) -> list[Any]:
    """Solve a square nonsingular system exactly."""
    n = len(rows)
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = row_echelon(aug, zero)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular linear system")
    return [red[i][n] for i in range(n)]
