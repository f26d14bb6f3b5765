"""Exact arithmetic: rationals, polynomials, rational functions, differential polynomials, jets."""
from .diffpoly import DiffPoly, total_derivative_test
from .jets import DiagJet, taylor_at_diagonal
from .poly import MAX_TIMES, VARIABLES, parse_poly, rat, render_poly, var
from .ratfunc import ONE, X, Y, ZERO, RatFunc

__all__ = [
    "DiffPoly", "DiagJet", "RatFunc", "MAX_TIMES", "VARIABLES", "ONE", "ZERO", "X", "Y",
    "parse_poly", "rat", "render_poly", "taylor_at_diagonal", "total_derivative_test", "var",
]
