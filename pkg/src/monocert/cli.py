"""Command-line front end.

Exit codes: 0 success / certified, 1 usage or parse error, 2 the queried
check failed, 3 indeterminate (evaluation left the field's domain).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import kernels
from .certify import (
    TOL_EXACT,
    TOL_QUAD,
    NotAGradientError,
    certify_convex,
    certify_convex_concave,
    certify_gradient,
    certify_monotone,
    classify_affinity,
    dumps,
    fit_skew_affine,
    reconstruct_potential,
    refute_skew_affine,
)
from .counterexample import PipelineConfig, VERDICT_CERTIFIED, make_pair, refute_additivity
from .dynamics import extragradient
from .expr import DomainError, ParseError
from .fields import (
    GridSpec,
    Region,
    ScalarField2,
    builtin_operator,
    f_minus,
    f_plus,
    gradient_field,
    saddle_field,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_INDETERMINATE = 0, 1, 2, 3

DEFAULT_U = "sin(x)*sin(y)"

# options whose values may start with '-' (e.g. --region -pi:pi:-pi:pi)
_SIGNED_VALUE_OPTS = ("--region", "--point", "--z0", "--anchor", "--a-search")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _g(v: float) -> str:
    return f"{v:.17g}"


def _pt(p) -> str:
    return f"({_g(p[0])}, {_g(p[1])})" if p is not None else "-"


def parse_real(tok: str) -> float:
    t = tok.strip().lower()
    if t in ("pi", "+pi"):
        return math.pi
    if t == "-pi":
        return -math.pi
    try:
        v = float(t)
    except ValueError:
        raise UsageError(f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"not a finite number: {tok!r}")
    return v


def parse_region(text: str) -> Region:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"region must be xmin:xmax:ymin:ymax, got {text!r}")
    try:
        return Region(*(parse_real(p) for p in parts))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_grid(text: str) -> GridSpec:
    try:
        nx, ny = text.lower().split("x")
        return GridSpec(int(nx), int(ny))
    except ValueError:
        raise UsageError(f"grid must be NXxNY with NX, NY >= 2, got {text!r}") from None


def parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"point must be X,Y, got {text!r}")
    return parse_real(parts[0]), parse_real(parts[1])


def parse_interval(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"interval must be LO:HI, got {text!r}")
    return parse_real(parts[0]), parse_real(parts[1])


def _add_source(p, scalar: bool = False):
    g = p.add_argument_group("operator source (pick one)")
    g.add_argument("--op", choices=["fplus", "fminus", "sum", "identity"],
                   help="built-in operator")
    g.add_argument("--u", metavar="EXPR", help="coupling term u(x,y) of the family")
    g.add_argument("--u-file", metavar="PATH", help="read u(x,y) from a text file")
    g.add_argument("--sign", choices=["plus", "minus"], default="plus",
                   help="family member built from --u (default: plus)")
    g.add_argument("--f", metavar="EXPR", help="scalar field f(x,y)")
    if not scalar:
        g.add_argument("--kind", choices=["gradient", "saddle"], default="saddle",
                       help="vector field built from --f (default: saddle)")


def _add_common(p):
    p.add_argument("--region", default="-pi:pi:-pi:pi", help="xmin:xmax:ymin:ymax")
    p.add_argument("--grid", default="129x129", help="NXxNY lattice")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=TOL_EXACT)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap for sweeps (default: available parallelism)")
    p.add_argument("--json", metavar="PATH", help="write the JSON report here")
    p.add_argument("--csv", metavar="PATH", help="write the grid metric CSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monocert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="value and Jacobian of a field at a point")
    _add_source(p)
    _add_common(p)
    p.add_argument("--point", required=True, help="X,Y")

    p = sub.add_parser("certify", help="certify a property on a grid")
    p.add_argument("property", choices=["monotone", "convex", "convex-concave", "gradient"])
    _add_source(p)
    _add_common(p)
    p.add_argument("--pairs", type=int, default=10_000, help="random pairs for monotonicity")

    p = sub.add_parser("fit-skew", help="least-squares skew-affine fit")
    _add_source(p)
    _add_common(p)

    p = sub.add_parser("refute-skew", help="refute skew-affine integrability")
    _add_source(p)
    _add_common(p)
    p.add_argument("--a-search", help="LO:HI interval for the skew parameter")
    p.add_argument("--threshold", type=float, default=TOL_QUAD)

    p = sub.add_parser("reconstruct", help="reconstruct the potential of a curl-free field")
    _add_source(p)
    _add_common(p)
    p.add_argument("--anchor", help="X,Y (default: region centre)")
    p.add_argument("--quad-step", type=float, default=1e-3)
    p.add_argument("--quad-tol", type=float, default=TOL_QUAD)

    p = sub.add_parser("counterexample", help="run the full counterexample pipeline")
    p.add_argument("--u", metavar="EXPR", help=f"coupling term (default: {DEFAULT_U})")
    p.add_argument("--u-file", metavar="PATH")
    _add_common(p)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--quad-step", type=float, default=1e-3)
    p.add_argument("--quad-tol", type=float, default=TOL_QUAD)
    p.add_argument("--threshold", type=float, default=TOL_QUAD)
    p.add_argument("--anchor", help="X,Y (default: region centre)")
    p.add_argument("--csv-dir", metavar="DIR", help="write one CSV per grid stage")

    p = sub.add_parser("solve", help="extragradient zero-finder")
    _add_source(p)
    _add_common(p)
    p.add_argument("--z0", default="1,1", help="X,Y start point")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.set_defaults(tol=1e-8)
    return parser


def _normalize_argv(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED_VALUE_OPTS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def _read_u(args):
    if args.u is not None and args.u_file is not None:
        raise UsageError("give --u or --u-file, not both")
    if args.u_file is not None:
        try:
            return Path(args.u_file).read_text(encoding="utf-8").strip()
        except OSError as exc:
            raise UsageError(f"cannot read {args.u_file}: {exc}") from None
    return args.u


def _scalar_source(args) -> ScalarField2:
    u = _read_u(args)
    chosen = [s for s in (args.op, u, args.f) if s is not None]
    if len(chosen) != 1:
        raise UsageError("select exactly one of --op, --u/--u-file, --f")
    if args.op is not None:
        if args.op == "fplus":
            return f_plus()
        if args.op == "fminus":
            return f_minus()
        raise UsageError(f"--op {args.op} has no scalar field; use fplus or fminus")
    if u is not None:
        pair = make_pair(u)
        return pair.f_plus if args.sign == "plus" else pair.f_minus
    return ScalarField2.from_expr(args.f)


def _vector_source(args):
    u = _read_u(args)
    chosen = [s for s in (args.op, u, args.f) if s is not None]
    if len(chosen) != 1:
        raise UsageError("select exactly one of --op, --u/--u-file, --f")
    if args.op is not None:
        return builtin_operator(args.op)
    if u is not None:
        pair = make_pair(u)
        return pair.F_plus if args.sign == "plus" else pair.F_minus
    f = ScalarField2.from_expr(args.f)
    return gradient_field(f) if args.kind == "gradient" else saddle_field(f)


def _write(args, report: dict, csv_writer=None):
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    if getattr(args, "csv", None) and csv_writer is not None:
        csv_writer(args.csv)


def _cert_exit(cert) -> int:
    if cert.status == "indeterminate":
        return EXIT_INDETERMINATE
    return EXIT_OK if cert.passed else EXIT_FAILED


def _print_cert(cert):
    print(f"{cert.property} {cert.subject}: {cert.status.upper()}")
    for c in cert.checks:
        mark = "ok  " if c.passed else "FAIL"
        obs = _g(c.observed) if c.observed is not None else c.details.get("error")
        thr = _g(c.threshold) if c.threshold is not None else ""
        print(f"  [{mark}] {c.id}: {c.metric} = {obs} {c.comparison} {thr} at {_pt(c.witness)}")


def _cmd_eval(args, region, grid):
    F = _vector_source(args)
    p = parse_point(args.point)
    ev = F.evaluate([p[0]], [p[1]])
    v, J = ev.value(0), ev.mat(0)
    report = {"schema_version": 1, "kind": "evaluation", "subject": F.name, "point": list(p),
              "value": list(v), "jacobian": J.tolist(), "jacobian_exact": ev.exact}
    print(f"{F.name} at {_pt(p)}: value = {_pt(v)}")
    print(f"  jacobian = [[{_g(J.a11)}, {_g(J.a12)}], [{_g(J.a21)}, {_g(J.a22)}]]"
          + ("" if ev.exact else " (finite differences)"))
    _write(args, report)
    return EXIT_OK


def _cmd_certify(args, region, grid):
    prop = args.property
    if prop == "monotone":
        cert = certify_monotone(_vector_source(args), region, grid, args.pairs, args.seed,
                                args.tol)
    elif prop == "gradient":
        cert = certify_gradient(_vector_source(args), region, grid, args.tol)
    elif prop == "convex":
        cert = certify_convex(_scalar_source(args), region, grid, args.tol, args.pairs,
                              args.seed)
    else:
        cert = certify_convex_concave(_scalar_source(args), region, grid, args.tol)
    _print_cert(cert)
    _write(args, cert.to_dict(), cert.write_csv if cert.grid_metric is not None else None)
    return _cert_exit(cert)


def _cmd_fit_skew(args, region, grid):
    F = _vector_source(args)
    fit = fit_skew_affine(F, region, grid)
    print(f"skew-affine fit {F.name}: a = {_g(fit.a)}, b = {_pt((fit.b1, fit.b2))}, "
          f"rms residual = {_g(fit.rms_residual)}, max residual = {_g(fit.max_residual)}")
    _write(args, fit.to_dict())
    return EXIT_OK


def _cmd_refute_skew(args, region, grid):
    F = _vector_source(args)
    a_search = parse_interval(args.a_search) if args.a_search else None
    try:
        w = refute_skew_affine(F, region, grid, a_search, args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = "REFUTED" if w.refuted else "NOT REFUTED"
    print(f"skew-affine integrability {F.name}: {verdict}; min sup residual = "
          f"{_g(w.min_sup_residual)} at a = {_g(w.best_a)} (threshold {_g(w.threshold)}); "
          f"asymmetry range [{_g(w.asym_lo)} at {_pt(w.p_lo)}, {_g(w.asym_hi)} at {_pt(w.p_hi)}]")
    _write(args, w.to_dict())
    return EXIT_OK if w.refuted else EXIT_FAILED


def _cmd_reconstruct(args, region, grid):
    F = _vector_source(args)
    anchor = parse_point(args.anchor) if args.anchor else None
    try:
        table = reconstruct_potential(F, region, grid, anchor, args.quad_step, args.quad_tol,
                                      args.tol)
    except NotAGradientError as exc:
        c = exc.certificate.checks[0]
        print(f"reconstruct {F.name}: NOT CURL-FREE; max |asymmetry| = {_g(c.observed)} "
              f"at {_pt(c.witness)}")
        _write(args, exc.certificate.to_dict())
        return EXIT_FAILED
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise UsageError(str(exc)) from None
    aff = classify_affinity(table, F, args.quad_tol)
    report = table.to_dict()
    report["affinity"] = aff.to_dict()
    ok = table.gradient_ok
    print(f"reconstruct {F.name}: {'OK' if ok else 'GRADIENT MISMATCH'}; "
          f"gradient mismatch = {_g(table.gradient_mismatch) if table.gradient_mismatch is not None else '-'}; "
          f"{'affine' if aff.affine else 'non-affine'} (spread {_g(aff.spread[0])}, {_g(aff.spread[1])})")
    _write(args, report, table.write_csv)
    return EXIT_OK if ok else EXIT_FAILED


def _cmd_counterexample(args, region, grid):
    u = _read_u(args) or DEFAULT_U
    config = PipelineConfig(tol=args.tol, quad_tol=args.quad_tol, quad_step=args.quad_step,
                            refute_threshold=args.threshold, pair_samples=args.pairs,
                            seed=args.seed,
                            anchor=parse_point(args.anchor) if args.anchor else None)
    cert = refute_additivity(u, region, grid, config)
    line = f"counterexample u = {cert.u_text}: {cert.verdict}"
    if cert.error:
        line += f" ({cert.error})"
    elif cert.first_failure:
        line += f" (first failure: {cert.first_failure})"
    print(line)
    _write(args, cert.to_dict())
    if args.csv_dir and cert.error is None:
        cert.write_csvs(args.csv_dir)
    if cert.error is not None:
        return EXIT_INDETERMINATE
    return EXIT_OK if cert.verdict == VERDICT_CERTIFIED else EXIT_FAILED


def _cmd_solve(args, region, grid):
    F = _vector_source(args)
    trace = extragradient(F, parse_point(args.z0), args.tol, args.max_iter, region, grid,
                          record_every=1 if args.csv else 0)
    state = "CONVERGED" if trace.converged else "NOT CONVERGED"
    print(f"extragradient {F.name}: {state} after {trace.iterations} iterations; "
          f"z = {_pt(trace.final_point)}, |F(z)|_inf = {_g(trace.final_residual)}")
    _write(args, trace.to_dict(), trace.write_csv)
    return EXIT_OK if trace.converged else EXIT_FAILED


_COMMANDS = {
    "eval": _cmd_eval,
    "certify": _cmd_certify,
    "fit-skew": _cmd_fit_skew,
    "refute-skew": _cmd_refute_skew,
    "reconstruct": _cmd_reconstruct,
    "counterexample": _cmd_counterexample,
    "solve": _cmd_solve,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_normalize_argv(argv))
        region = parse_region(args.region)
        grid = parse_grid(args.grid)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        kernels.set_threads(args.threads)
        return _COMMANDS[args.command](args, region, grid)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.text:
            print(f"  {exc.text}\n  {' ' * len(exc.text.encode()[:exc.offset].decode(errors='ignore'))}^",
                  file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    finally:
        kernels.set_threads(None)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
