"""Command-line entry point: ``cweig <command> ...``.

Exit codes: 0 success, 1 usage or parse error, 2 domain error (infeasible
shape, multiple eigenvalue, uncertified tail), 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .disk_analysis import classify_disk
from .eigensolver import SolverOptions, eigenvalues
from .errors import (
    IllConditioned,
    InfeasibleShape,
    MissedEigenvalue,
    MultiplicityError,
    ShapeFileError,
    SolverFailure,
    UncertifiedTail,
)
from .geometry import DEFAULT_MARGIN, DEFAULT_NMAX, SupportShape
from .io import RunManifest, read_shape, write_csv, write_shape, write_svg
from .optimizer import OptimizationConfig, minimize
from .shape_calculus import fd_gradient, gradient, optimality_residual

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for domain errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _load(path: str) -> SupportShape:
    return SupportShape.disk() if path == "disk" else read_shape(path)


def _emit(header, rows, out_dir: Path | None, name: str, manifest: RunManifest | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())
    if out_dir is not None:
        manifest.add(write_csv(out_dir / name, header, rows))


def _prepare(args) -> tuple[Path | None, RunManifest]:
    out = Path(args.out) if getattr(args, "out", None) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return out, RunManifest(args.command, config, getattr(args, "seed", None))


def cmd_analyze_disk(args) -> int:
    out, manifest = _prepare(args)
    rows = []
    for v in classify_disk(args.h):
        rows.append([v.h, v.eigen.m, v.eigen.p, f"{v.eigen.lam:.10f}", v.status, v.witness])
    _emit(["h", "m", "p", "lambda", "status", "witness"], rows, out, "verdicts.csv", manifest)
    if out is not None:
        manifest.write(out)
    return EXIT_OK


def cmd_solve(args) -> int:
    out, manifest = _prepare(args)
    shape = _load(args.shape)
    res = eigenvalues(shape, args.h, SolverOptions(basis_size=args.basis))
    rows = [[r.h, f"{r.lam:.12g}", r.multiplicity, f"{r.residual:.3e}"] for r in res[: args.h]]
    _emit(["h", "lambda", "multiplicity", "residual"], rows, out, "eigenvalues.csv", manifest)
    if out is not None:
        manifest.write(out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    try:
        config = OptimizationConfig(h=args.h, n_max=args.nmax, m_constraints=args.mconstraints,
                                    restarts=args.restarts, max_iter=args.max_iter,
                                    margin=args.margin, seed=args.seed, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    # validate before touching the filesystem
    out, manifest = _prepare(args)
    out = out or Path(f"opt_h{args.h}")
    out.mkdir(parents=True, exist_ok=True)
    manifest.config = {**manifest.config, "resolved": asdict(config)}
    r = minimize(config)
    manifest.add(write_shape(r.shape, out / "shape.txt"))
    manifest.add(write_svg(r.shape, out / "boundary.svg"))
    keys = ["restart", "cycle", "iter", "lambda_h", "objective", "grad_norm", "margin", "mu", "group"]
    manifest.add(write_csv(out / "iterations.csv", keys, ([e[k] for k in keys] for e in r.log)))
    manifest.add(write_csv(out / "restarts.csv", ["restart", "lambda_h"], enumerate(r.restart_values)))
    m = r.multiplicity
    residual = np.atleast_1d(r.residual)
    summary = [
        ["h", r.h], ["lambda_h", f"{r.lambda_h:.10f}"], ["disk_lambda", f"{r.disk_lambda:.10f}"],
        ["improved", r.improved], ["best_lambda", f"{r.best_lambda:.10f}"],
        ["lambda_below", f"{m.lam[0]:.10f}"], ["lambda_above", f"{m.lam[2]:.10f}"],
        ["gap_below", f"{m.gap_below:.3e}"], ["gap_above", f"{m.gap_above:.3e}"],
        ["label_below", m.label_below], ["label_above", m.label_above],
        ["optimality_residual", " ".join(f"{v:.3e}" for v in residual)], ["note", r.note],
    ]
    _emit(["field", "value"], summary, out, "summary.csv", manifest)
    manifest.write(out)
    return EXIT_OK


def cmd_grad_check(args) -> int:
    out, manifest = _prepare(args)
    shape = _load(args.shape)
    opts = SolverOptions(basis_size=args.basis, n_collocation=max(256, 4 * args.basis + 16))
    eig = eigenvalues(shape, args.h, opts)[args.h - 1]
    g = gradient(shape, args.h, eig, n_max=max(args.harmonics))
    fd = fd_gradient(shape, args.h, args.harmonics, step=args.step, opts=opts, lam0=eig.lam)
    rows = []
    for k in fd.ks:
        ga, gb = g.entry(int(k))
        fa, fb = fd.entry(int(k))
        for part, an, nu in (("a", ga, fa), ("b", gb, fb)):
            rel = abs(an - nu) / max(abs(nu), 1e-3 * eig.lam)
            rows.append([int(k), part, f"{an:.8e}", f"{nu:.8e}", f"{rel:.2e}"])
    _emit(["k", "part", "analytic", "finite_difference", "rel_error"], rows, out, "gradcheck.csv", manifest)
    if out is not None:
        manifest.write(out)
    return EXIT_OK


def cmd_check_optimality(args) -> int:
    out, manifest = _prepare(args)
    shape = _load(args.shape)
    eig = eigenvalues(shape, args.h, SolverOptions(basis_size=args.basis))[args.h - 1]
    if not eig.is_simple and not args.allow_double:
        raise MultiplicityError(f"lambda_{args.h} belongs to cluster {eig.cluster}; "
                                "use --allow-double for per-eigenfunction residuals")
    res = np.atleast_1d(optimality_residual(shape, eig))
    g = gradient(shape, args.h, eig) if eig.is_simple else None
    rows = [[args.h, f"{eig.lam:.12g}", eig.multiplicity, i, f"{v:.3e}",
             f"{g.max_abs():.3e}" if g is not None else ""] for i, v in enumerate(res)]
    _emit(["h", "lambda", "multiplicity", "eigenfunction", "residual", "gradient_max"],
          rows, out, "optimality.csv", manifest)
    if out is not None:
        manifest.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cweig", description="Dirichlet eigenvalues of planar constant-width bodies.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze-disk", help="classify the disk eigenvalues as weak local minimisers")
    a.add_argument("--h", type=_positive, default=50, help="largest index (default 50)")
    a.add_argument("--out", help="directory for verdicts.csv and the manifest")
    a.set_defaults(func=cmd_analyze_disk)

    def shape_cmd(name, func, help_, h_default=None):
        s = sub.add_parser(name, help=help_)
        s.add_argument("shape", help="shape file, or 'disk' for the disk of width 2")
        s.add_argument("--h", type=_positive, required=h_default is None, default=h_default)
        s.add_argument("--basis", type=int, default=60, help="Fourier-Bessel orders (default 60)")
        s.add_argument("--out", help="directory for CSV output and the manifest")
        s.set_defaults(func=func)
        return s

    shape_cmd("solve", cmd_solve, "eigenvalues lambda_1..lambda_h of a shape")
    g = shape_cmd("grad-check", cmd_grad_check, "shape gradient against central differences")
    g.set_defaults(basis=120)
    g.add_argument("--harmonics", type=int, nargs="+", default=[3, 5, 7])
    g.add_argument("--step", type=float, default=1e-5)
    c = shape_cmd("check-optimality", cmd_check_optimality, "optimality residual of lambda_h")
    c.add_argument("--allow-double", action="store_true", help="report a double eigenvalue per eigenfunction")

    o = sub.add_parser("optimize", help="minimise lambda_h over constant-width bodies")
    o.add_argument("--h", type=_positive, required=True)
    o.add_argument("--nmax", type=int, default=DEFAULT_NMAX)
    o.add_argument("--mconstraints", type=int, default=800)
    o.add_argument("--restarts", type=_positive, default=8)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    o.add_argument("--max-iter", type=_positive, default=300)
    o.add_argument("--workers", type=_positive, default=1)
    o.add_argument("--out", help="output directory (default opt_h<h>)")
    o.set_defaults(func=cmd_optimize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ShapeFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleShape, MultiplicityError, UncertifiedTail) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (SolverFailure, IllConditioned, MissedEigenvalue) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
