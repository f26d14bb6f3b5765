"""Command-line interface: heatkernel <subcommand> [options]."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence, TextIO

from .airynum import (AiryEvalConfig, PoleProximityError, QuadratureError, airy_eval,
                      airy_ode_residual, kernel_grid, samples_to_csv)
from .exactalg import poly as P
from .gdflows import conservation_suite, gd_boussinesq_check, gd_rhs, symbolic_operator
from .grassmann import GrPoint, GrPointError, baker, check_invariance, krichever_operator, load_grpoint
from .hadamard import (SmoothnessError, JetBudgetError, check_kappa, default_kappa, finiteness,
                       had_dual, had_from_resolvent, had_jet_recursion)
from .pdo import adjoint
from .resolvent import res_exact

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _kappa(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"kappa must be +1 or -1, got {text!r}") from None
    if value not in (1, -1):
        raise argparse.ArgumentTypeError(f"kappa must be +1 or -1, got {text!r}")
    return value


def _rational(text: str):
    try:
        return P.rat(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected an exact rational p/q, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="GrPoint file")
    common.add_argument("--N", type=int, help="operator order")
    common.add_argument("--kappa", type=_kappa, help="+1 or -1 (default: forced value for even N, +1 for odd)")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--floor", type=int, help="precision floor (default -3N)")
    common.add_argument("--kmax", type=int, help="Hadamard depth (default: finiteness bound + 1)")
    common.add_argument("--jet-order", type=int, default=6, help="jet coefficients per entry")
    for name in ("s1", "s2", "s3"):
        common.add_argument(f"--{name}", type=_rational, help=f"bind {name} to an exact rational")
    common.add_argument("--abs-tol", type=float, default=1e-12)
    common.add_argument("--rel-tol", type=float, default=1e-10)
    common.add_argument("--tol", type=float, default=1e-6, help="verification tolerance for residuals")

    parser = _Parser(prog="heatkernel", description="Exact heat-kernel coefficients of higher-order operators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("operator", parents=[common], help="Krichever operator K_{z^N} of a GrPoint")
    sub.add_parser("resolvent", parents=[common], help="resolvent coefficients omega_n(x, y)")
    p = sub.add_parser("hadamard", parents=[common], help="Hadamard coefficients H_k^j")
    p.add_argument("--mode", choices=("exact", "jet"), help="default: exact with --input, else jet")
    p.add_argument("--dual", action="store_true", help="table of the adjoint equation")
    sub.add_parser("finiteness", parents=[common], help="finiteness bound and observed cutoff")
    p = sub.add_parser("flows", parents=[common], help="Gelfand-Dickey flow right-hand sides")
    p.add_argument("--m", type=int, default=None, help="flow index")
    p.add_argument("--boussinesq", type=int, metavar="K", help="check the Hadamard form for N = 3 at depth K")
    p = sub.add_parser("conserve", parents=[common], help="Euler-operator conservation suite")
    p.add_argument("--mmax", type=int, default=3)
    p = sub.add_parser("airy", parents=[common], help="A_N^(j)(z) values and ODE residuals")
    p.add_argument("--z", type=_floats, default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    p.add_argument("--deriv", type=int, default=0)
    p = sub.add_parser("kernel-check", parents=[common], help="PDE residual of the assembled kernel on a grid")
    p.add_argument("--grid", default="default", help="'default' or 'xs;ys;ts' comma lists")
    p.add_argument("--dual", action="store_true", help="check the kernel of the adjoint equation")
    return parser


# -- helpers --------------------------------------------------------------------------------------
def _point(args) -> GrPoint:
    if not args.input:
        raise InputError(f"{args.command} needs --input")
    try:
        return load_grpoint(args.input)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror}") from None


def _params(args) -> dict:
    return {n: getattr(args, n) for n in ("s1", "s2", "s3") if getattr(args, n) is not None}


def _order(args, point: GrPoint | None = None) -> int:
    N = args.N if args.N is not None else (point.N if point is not None else None)
    if N is None:
        raise InputError("the operator order is required (--N or an 'N:' line)")
    if N < 2:
        raise InputError("N must be at least 2")
    return N


def _kappa_for(args, N: int) -> int:
    kappa = default_kappa(N) if args.kappa is None else args.kappa
    try:
        check_kappa(N, kappa)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return kappa


def _wave(args, point: GrPoint):
    return baker(point, params=_params(args), keep_params=True)


def _operator(args, point: GrPoint, wave, N: int):
    if not check_invariance(point, N, _params(args) or None):
        raise VerificationError(f"the point is not z^{N}-invariant; K_(z^{N}) is not differential")
    floor = args.floor if args.floor is not None else -3 * N
    K = krichever_operator(wave, N, floor)
    if not K.is_differential:
        raise VerificationError("Krichever operator has a nonzero Volterra part")
    return K.differential


class VerificationError(RuntimeError):
    pass


def _emit(out: TextIO, text: str) -> None:
    out.write(text if text.endswith("\n") else text + "\n")


# -- subcommands ----------------------------------------------------------------------------------
def cmd_operator(args, out: TextIO) -> int:
    point = _point(args)
    N = _order(args, point)
    L = _operator(args, point, _wave(args, point), N)
    if args.format == "json":
        _emit(out, json.dumps({"N": N, "coefficients": {str(d): str(L[d]) for d in range(N + 1) if L[d]}},
                              indent=2))
    else:
        _emit(out, L.render())
    return EXIT_OK


def cmd_resolvent(args, out: TextIO) -> int:
    point = _point(args)
    table = res_exact(_wave(args, point))
    _emit(out, table.to_json() if args.format == "json" else table.render())
    return EXIT_OK


def _exact_table(args, point: GrPoint, N: int, kappa: int):
    wave = _wave(args, point)
    _operator(args, point, wave, N)
    res = res_exact(wave)
    kmax = args.kmax if args.kmax is not None else finiteness(res, N).guaranteed_cutoff + 1
    return had_from_resolvent(res, N, kappa, kmax), res, wave


def cmd_hadamard(args, out: TextIO) -> int:
    mode = args.mode or ("exact" if args.input else "jet")
    if mode == "exact":
        point = _point(args)
        N = _order(args, point)
        table, _, _ = _exact_table(args, point, N, _kappa_for(args, N))
        if args.dual:
            table = had_dual(table)
    else:
        N = _order(args)
        if N not in (2, 3):
            raise InputError("jet recursions are available for N = 2 and N = 3 only")
        if args.dual:
            raise InputError("--dual needs exact mode")
        table = had_jet_recursion(N, _kappa_for(args, N), args.kmax or 3, args.jet_order)
    _emit(out, table.to_json() if args.format == "json" else table.render())
    return EXIT_OK


def cmd_finiteness(args, out: TextIO) -> int:
    point = _point(args)
    N = _order(args, point)
    table, res, _ = _exact_table(args, point, N, _kappa_for(args, N))
    rep = finiteness(res, N)
    rep.observed_cutoff = table.cutoff
    _emit(out, rep.to_json() if args.format == "json" else rep.render())
    return EXIT_OK if table.finite else EXIT_VERIFY


def cmd_flows(args, out: TextIO) -> int:
    N = _order(args)
    L = symbolic_operator(N)
    if args.boussinesq is not None:
        if N != 3:
            raise InputError("--boussinesq needs N = 3")
        ok = all(gd_boussinesq_check(L, k) for k in range(1, args.boussinesq + 1))
        _emit(out, f"boussinesq k <= {args.boussinesq}: {'ok' if ok else 'FAILED'}")
        return EXIT_OK if ok else EXIT_VERIFY
    ms = [args.m] if args.m is not None else list(range(1, N + 2))
    if any(m < 1 for m in ms):
        raise InputError("flow index must be positive")
    reports = [gd_rhs(L, m) for m in ms]
    if args.format == "json":
        _emit(out, "[" + ",\n".join(r.to_json().rstrip() for r in reports) + "]")
    else:
        _emit(out, "".join(r.render() for r in reports))
    return EXIT_OK


def cmd_conserve(args, out: TextIO) -> int:
    N = _order(args)
    results = conservation_suite(N, args.mmax, args.kmax or 4)
    if args.format == "json":
        _emit(out, json.dumps([{"m": r.m, "k": r.k, "j": r.j, "conserved": r.conserved} for r in results],
                              indent=2))
    else:
        _emit(out, "\n".join(r.render() for r in results))
    return EXIT_OK if all(r.conserved for r in results) else EXIT_VERIFY


def _airy_cfg(args, N: int, kappa: int) -> AiryEvalConfig:
    return AiryEvalConfig(N, kappa, abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def cmd_airy(args, out: TextIO) -> int:
    N = _order(args)
    cfg = _airy_cfg(args, N, _kappa_for(args, N))
    rows = [(z, airy_eval(cfg, z, args.deriv), airy_ode_residual(cfg, z)) for z in args.z]
    if args.format == "json":
        _emit(out, json.dumps([{"z": z, "value": v, "odeResidual": r} for z, v, r in rows], indent=2))
    elif args.format == "csv":
        _emit(out, "z,value,ode_residual\n" + "\n".join(f"{z:.17g},{v:.17g},{r:.17g}" for z, v, r in rows))
    else:
        _emit(out, "\n".join(f"A_{N}^({args.deriv})({z:g}) = {v:.15g}   ode residual {r:.3g}" for z, v, r in rows))
    bad = max((abs(r) for _, _, r in rows), default=0.0) > args.tol
    return EXIT_VERIFY if bad else EXIT_OK


def _grid(text: str):
    if text == "default":
        return {}
    parts = text.split(";")
    if len(parts) != 3:
        raise InputError("--grid must be 'default' or 'xs;ys;ts'")
    xs, ys, ts = (_floats(p) for p in parts)
    if not (xs and ys and ts) or min(ts) <= 0:
        raise InputError("grid needs nonempty lists and positive times")
    return {"xs": xs, "ys": ys, "ts": ts}


def cmd_kernel_check(args, out: TextIO) -> int:
    point = _point(args)
    N = _order(args, point)
    kappa = _kappa_for(args, N)
    grid = _grid(args.grid)
    table, _, wave = _exact_table(args, point, N, kappa)
    free = set().union(*(H.variables() for H in table.entries.values())) - {"x", "y"}
    if free:
        raise InputError(f"numeric checks need bound parameters; pass --{' --'.join(sorted(free))}")
    if not table.finite:
        raise VerificationError("Hadamard expansion is not finite up to --kmax")
    L = _operator(args, point, wave, N)
    if args.dual:
        table, L = had_dual(table), adjoint(L)
    try:
        samples = kernel_grid(table, L, _airy_cfg(args, N, kappa), **grid)
    except ValueError as exc:
        if isinstance(exc, PoleProximityError):
            raise
        raise InputError(str(exc)) from None
    _emit(out, samples_to_csv(samples))
    worst = max(abs(s.residual) for s in samples)
    if worst > args.tol:
        print(f"max |residual| = {worst:.3g} exceeds {args.tol:g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "operator": cmd_operator,
    "resolvent": cmd_resolvent,
    "hadamard": cmd_hadamard,
    "finiteness": cmd_finiteness,
    "flows": cmd_flows,
    "conserve": cmd_conserve,
    "airy": cmd_airy,
    "kernel-check": cmd_kernel_check,
}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (InputError, GrPointError, argparse.ArgumentTypeError) as exc:
        print(f"heatkernel: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (VerificationError, SmoothnessError, QuadratureError, PoleProximityError) as exc:
        print(f"heatkernel: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except JetBudgetError as exc:
        print(f"heatkernel: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
