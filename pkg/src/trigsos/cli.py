"""Command-line front end: ``trigsos <command> ...``.

Results go to stdout (or ``--output``) as JSON or CSV. Failures are reported
on stderr as one JSON line and mapped to exit codes:

    2  unreadable input or malformed document
    3  polynomial degree too large for the requested level
    4  numerical precondition failed (degenerate minimizer, unsound certificate)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from contextlib import nullcontext

import numpy as np

from .chebyshev import hypercube_to_dict, lift, parse_hypercube, to_chebyshev_basis
from .decomposition import decompose, fitted_decay_exponent, reports_to_csv
from .fourier import PolyFormatError, dumps_poly, parse_poly, random_trig_poly
from .kernels import CertificateError, KernelSpec, build_certificate, half_degree, theorem1_bound
from .local import (ConditioningError, estimate_conditioning, eta_from_xi, global_minimize,
                    theorem2_constants, xi_from_eta)
from .solvers import SolverOptions, sos_bound, spectral_bound
from .toeplitz import DegreeError

EXIT_INPUT = 2
EXIT_DEGREE = 3
EXIT_NUMERIC = 4


def _fmt(x: float) -> str:
    return "nan" if x is None or not math.isfinite(x) else format(x, ".17g")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_poly(path):
    return parse_poly(_read_text(path))


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=1, allow_nan=True) + "\n")


def _threads(args):
    n = getattr(args, "threads", None)
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _workers(args):
    return getattr(args, "threads", None)


def _solve(f, s, args):
    if args.method == "spectral":
        return spectral_bound(f, s)
    opts = SolverOptions(tol=args.tol, max_iters=args.max_iters, mu0=args.mu0, method=args.solver)
    return sos_bound(f, s, opts)


# -- commands -----------------------------------------------------------------

def cmd_minimize(args) -> int:
    f = _load_poly(args.poly)
    s = half_degree(f) if args.degree is None else args.degree
    report = _solve(f, s, args)
    _emit_json(args, report.to_dict(certificates=args.emit_certificates))
    return 0


def cmd_oracle(args) -> int:
    f = _load_poly(args.poly)
    res = global_minimize(f, args.grid, workers=_workers(args))
    _emit_json(args, res.to_dict())
    return 0


def cmd_certify_kernel(args) -> int:
    f = _load_poly(args.poly)
    r = max(half_degree(f), 1)
    s = args.degree if args.degree is not None else (3 * r if args.kernel == "triangular" else r)
    f_star = args.f_star
    if f_star is None:
        f_star = global_minimize(f, workers=_workers(args)).f_star
    cert = build_certificate(f, f_star, KernelSpec(args.kernel, s, f.dim))
    _emit_json(args, cert.to_dict(include_gram=args.emit_certificates))
    return 0


def _theory_row(f, s, t2):
    bounds = []
    for kind in ("triangular", "box"):
        try:
            bounds.append(theorem1_bound(f, KernelSpec(kind, s, f.dim)))
        except ValueError:
            pass
    thm1 = min(bounds) if bounds else math.nan
    thm2 = t2.epsilon_bar(s) if t2 is not None else math.nan
    return thm1, thm2


def cmd_sweep(args) -> int:
    f = _load_poly(args.poly)
    if args.s_min > args.s_max:
        raise ValueError("--s-min exceeds --s-max")
    if f.degree > 2 * args.s_min:
        raise DegreeError(f"degree {f.degree} exceeds 2s = {2 * args.s_min}")
    oracle = global_minimize(f, workers=_workers(args))
    t2 = None
    if args.with_theory and f.degree > 0:
        cc = estimate_conditioning(f, oracle, args.xi, workers=_workers(args))
        t2 = theorem2_constants(f, cc, oracle)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "bound", "eps", "thm1_bound", "thm2_bound"])
    for s in range(args.s_min, args.s_max + 1):
        bound = _solve(f, s, args).lower_bound
        thm1, thm2 = _theory_row(f, s, t2)
        w.writerow([s, _fmt(bound), _fmt(oracle.f_star - bound), _fmt(thm1), _fmt(thm2)])
    _emit(args, buf.getvalue())
    return 0


def cmd_cheb_lift(args) -> int:
    p = parse_hypercube(_read_text(args.poly))
    f = lift(p)
    out = json.loads(dumps_poly(f))
    if args.with_chebyshev:
        out = {"lifted": out, "chebyshev": hypercube_to_dict(to_chebyshev_basis(p))}
    _emit_json(args, out)
    return 0


def cmd_conditioning(args) -> int:
    f = _load_poly(args.poly)
    oracle = global_minimize(f, workers=_workers(args))
    cc = estimate_conditioning(f, oracle, args.xi, workers=_workers(args))
    t2 = theorem2_constants(f, cc, oracle)
    out = {"oracle": oracle.to_dict(), "conditioning": cc.to_dict(), "theorem2": t2.to_dict(),
           "eta": eta_from_xi(args.xi)}
    if args.s:
        out["epsilon_bar"] = {str(s): t2.epsilon_bar(s) for s in args.s}
    _emit_json(args, out)
    return 0


def cmd_decompose(args) -> int:
    f = _load_poly(args.poly)
    oracle = global_minimize(f, workers=_workers(args))
    cc = estimate_conditioning(f, oracle, xi_from_eta(args.eta), workers=_workers(args))
    reports = decompose(f, oracle, cc.alpha, args.degree, eta=args.eta, fft_n=args.fft_n)
    out = {"oracle": oracle.to_dict(), "conditioning": cc.to_dict(), "eta": args.eta,
           "reports": [r.to_dict() for r in reports]}
    if len(reports) >= 2 and all(r.residual > 0 for r in reports):
        out["decay_exponent"] = fitted_decay_exponent([r.s for r in reports],
                                                      [r.residual for r in reports])
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(reports_to_csv(reports))
    _emit_json(args, out)
    return 0


def cmd_gen(args) -> int:
    f = random_trig_poly(args.dim, args.degree, np.random.default_rng(args.seed),
                         fnorm=args.fnorm, mean=args.mean)
    _emit(args, dumps_poly(f) + "\n")
    return 0


# -- parser -------------------------------------------------------------------

def _env_threads():
    raw = os.environ.get("TRIGSOS_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        return None
    return n if n > 0 else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trigsos", description="Certified lower bounds for trigonometric polynomials.")
    parser.add_argument("--threads", type=int, default=_env_threads(),
                        help="thread count for FFT scans and BLAS (default: $TRIGSOS_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, poly=True):
        if poly:
            p.add_argument("poly", help="polynomial JSON file, or - for stdin")
        p.add_argument("-o", "--output", help="write to this file instead of stdout")

    def solver_flags(p):
        p.add_argument("--method", choices=("sos", "spectral"), default="sos")
        p.add_argument("--solver", choices=("ipm", "smooth"), default="ipm")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--mu0", type=float, default=None)

    p = sub.add_parser("minimize", help="lower bound at one relaxation level")
    common(p)
    p.add_argument("--degree", type=int, default=None, help="relaxation level s (default: ceil(deg/2))")
    solver_flags(p)
    p.add_argument("--emit-certificates", action="store_true")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("oracle", help="global minimum by grid scan and Newton polish")
    common(p)
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("certify-kernel", help="explicit kernel SOS certificate")
    common(p)
    p.add_argument("--kernel", choices=("triangular", "box"), default="triangular")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--f-star", type=float, default=None)
    p.add_argument("--emit-certificates", action="store_true", help="include the Gram matrix")
    p.set_defaults(func=cmd_certify_kernel)

    p = sub.add_parser("sweep", help="bounds and theory columns over a range of levels (CSV)")
    common(p)
    p.add_argument("--s-min", type=int, required=True)
    p.add_argument("--s-max", type=int, required=True)
    solver_flags(p)
    p.add_argument("--with-theory", action="store_true")
    p.add_argument("--xi", type=float, default=0.5)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cheb-lift", help="lift a hypercube polynomial to the torus")
    common(p)
    p.add_argument("--with-chebyshev", action="store_true")
    p.set_defaults(func=cmd_cheb_lift)

    p = sub.add_parser("conditioning", help="conditioning constants and exponential-rate constants")
    common(p)
    p.add_argument("--xi", type=float, default=0.5)
    p.add_argument("--s", type=int, nargs="*", default=[])
    p.set_defaults(func=cmd_conditioning)

    p = sub.add_parser("decompose", help="explicit SOS decomposition and truncation residuals")
    common(p)
    p.add_argument("--degree", type=int, nargs="+", default=[4, 8, 16, 32])
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--fft-n", type=int, default=None)
    p.add_argument("--csv", help="also write s,residual,bound to this file")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gen", help="random polynomial")
    common(p, poly=False)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fnorm", type=float, default=None)
    p.add_argument("--mean", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    msg = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(msg) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _threads(args):
            return args.func(args)
    except DegreeError as exc:
        return _fail(EXIT_DEGREE, exc)
    except (ConditioningError, CertificateError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (OSError, PolyFormatError, json.JSONDecodeError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)


if __name__ == "__main__":
    sys.exit(main())
