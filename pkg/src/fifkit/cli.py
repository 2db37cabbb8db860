"""Command-line front end: ``fifkit <command> [options]``.

Exit status is 0 on success, 1 for invalid input or options and 2 when a
fixed-point iteration does not converge.  Output files are written
atomically; without ``--out`` results go to standard output.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import attractor as att
from . import fif1d, fis2d
from . import io as fio
from .errors import FifError, NonConvergenceError, PolicyError
from .ifs1d import build_ifs
from .fis2d import SeamPolicy

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 1, 2
DEFAULT_RES_1D = 4096
DEFAULT_RES_2D = 512


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _common(p, two_d=False):
    p.add_argument("--tol", type=float, default=1e-10, help="sup-norm stopping threshold (default 1e-10)")
    p.add_argument("--max-iter", type=int, default=200, help="fixed-point iteration cap (default 200)")
    default = DEFAULT_RES_2D if two_d else DEFAULT_RES_1D
    what = "lattice intervals per side, 513x513 samples" if two_d else "lattice intervals, 4097 samples"
    p.add_argument("--resolution", type=int, default=default, help=f"{what} (default {default})")
    p.add_argument("--out", help="output file (default: standard output)")


def _source_1d(p):
    p.add_argument("--ifs", help="IFS JSON written by 'construct'")
    p.add_argument("--data", help="data CSV with header t,x")
    p.add_argument("--alpha", help="scaling: scalar (broadcast), comma list, or CSV/JSON file")


def _source_2d(p):
    p.add_argument("--ifs", help="surface IFS JSON written by 'fis2d-build'")
    p.add_argument("--grid", help="grid JSON {xs,ys,zs} or CSV x,y,z triples")
    p.add_argument("--alpha", help="scaling: scalar (broadcast), N x M matrix file (JSON or CSV)")


def _policy(p, default="average"):
    p.add_argument("--policy", choices=[s.value for s in SeamPolicy], default=default,
                   help=f"seam policy (default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fifkit", description="Fractal interpolation functions and surfaces.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("construct", help="build a 1D IFS from data and scaling factors")
    p.add_argument("--data", required=True, help="data CSV with header t,x")
    p.add_argument("--alpha", required=True, help="scaling: scalar (broadcast), comma list, or CSV/JSON file")
    p.add_argument("--out", help="output file (default: standard output)")

    p = sub.add_parser("eval", help="evaluate the FIF on a uniform lattice")
    _source_1d(p)
    _common(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("integrate", help="integrate the FIF")
    _source_1d(p)
    _common(p)
    p.add_argument("--method", choices=["closed", "quadrature", "both"], default="both")

    p = sub.add_parser("attractor", help="compute the attractor as points or a raster")
    _source_1d(p)
    p.add_argument("--method", choices=["chaos", "deterministic"], default="chaos")
    p.add_argument("--seed", type=int, default=0, help="chaos game seed (default 0)")
    p.add_argument("--iterations", type=int, default=100_000, help="chaos game points (default 100000)")
    p.add_argument("--burn-in", type=int, default=100, help="chaos game points discarded (default 100)")
    p.add_argument("--weighting", choices=["uniform", "area"], default="uniform")
    p.add_argument("--depth", type=int, default=14, help="Hutchinson steps for deterministic (default 14)")
    p.add_argument("--format", choices=["csv", "pgm"], default="csv")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--pgm-encoding", choices=["p2", "p5"], default="p5")
    p.add_argument("--out", help="output file (default: standard output)")

    p = sub.add_parser("compare", help="FIF vs piecewise-linear interpolant with its error bound")
    _source_1d(p)
    _common(p)

    p = sub.add_parser("violate", help="perturb one end point condition and report the effects")
    _source_1d(p)
    _common(p)
    p.add_argument("--cell", type=int, default=1, help="1-based cell whose q_n0 is shifted (default 1)")
    p.add_argument("--delta", type=float, default=0.1, help="shift added to q_n0 (default 0.1)")

    p = sub.add_parser("fis2d-build", help="build a surface IFS from grid data")
    p.add_argument("--grid", required=True, help="grid JSON {xs,ys,zs} or CSV x,y,z triples")
    p.add_argument("--alpha", required=True, help="scaling: scalar (broadcast), N x M matrix file")
    p.add_argument("--out", help="output file (default: standard output)")

    p = sub.add_parser("fis2d-eval", help="evaluate the surface on a lattice")
    _source_2d(p)
    _common(p, two_d=True)
    _policy(p)
    p.add_argument("--format", choices=["csv", "pgm"], default="csv")
    p.add_argument("--pgm-encoding", choices=["p2", "p5"], default="p5")

    p = sub.add_parser("fis2d-check", help="one raw operator step: collinearity and seam jumps")
    _source_2d(p)
    _common(p, two_d=True)

    p = sub.add_parser("fis2d-integrate", help="integrate the surface")
    _source_2d(p)
    _common(p, two_d=True)
    _policy(p)
    p.add_argument("--method", choices=["closed", "quadrature", "both"], default="both")
    return parser


def flags_reference() -> str:
    """Help text for the top-level parser followed by every subcommand's."""
    parser = build_parser()
    parts = [parser.format_help()]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, p in sub.choices.items():
        parts.append(f"\n== {name} ==\n{p.format_help()}")
    return "".join(parts)


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _alpha_source(arg: str):
    if arg is None:
        raise UsageError("--alpha is required with --data/--grid")
    if os.path.exists(arg):
        return _read(arg)
    return arg


def _alphas_1d(arg, N):
    raw = _alpha_source(arg)
    vals = fio.parse_alphas(raw)
    if len(vals) == 1:
        vals = vals * N
    return vals


def _alphas_2d(arg, N, M):
    raw = _alpha_source(arg)
    if isinstance(raw, bytes):
        return fio.parse_alpha_matrix(raw)
    vals = fio.parse_alphas(raw)
    if len(vals) == 1:
        return vals[0]
    if len(vals) == N * M:
        return np.array(vals).reshape(N, M)
    raise UsageError(f"--alpha needs 1 or {N * M} values, got {len(vals)}")


def _load_1d(args):
    if args.ifs:
        if args.data or args.alpha:
            raise UsageError("give either --ifs or --data/--alpha, not both")
        return fio.parse_ifs1d(_read(args.ifs))
    if not args.data:
        raise UsageError("one of --ifs or --data is required")
    data = fio.parse_dataset1d(_read(args.data))
    return build_ifs(data, _alphas_1d(args.alpha, data.N))


def _load_2d(args):
    if args.ifs:
        if args.grid or args.alpha:
            raise UsageError("give either --ifs or --grid/--alpha, not both")
        return fio.parse_ifs2d(_read(args.ifs))
    if not args.grid:
        raise UsageError("one of --ifs or --grid is required")
    grid = fio.parse_grid2d(_read(args.grid))
    return fis2d.build_ifs2d(grid, _alphas_2d(args.alpha, grid.N, grid.M))


def _cfg(args):
    try:
        return fif1d.FixedPointConfig(tol=args.tol, max_iter=args.max_iter, resolution=args.resolution)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args, blob: bytes):
    if args.out:
        fio.atomic_write(args.out, blob)
    else:
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()


def cmd_construct(args):
    data = fio.parse_dataset1d(_read(args.data))
    return fio.serialize_ifs1d(build_ifs(data, _alphas_1d(args.alpha, data.N)))


def cmd_eval(args):
    ifs, cfg = _load_1d(args), _cfg(args)
    f = fif1d.fixed_point(ifs, cfg)
    if args.format == "json":
        return fio.dumps({"t": f.grid, "f": f.samples, "iterations": len(f.history)})
    return fio.serialize_grid_function(f)


def _integrate_report(closed, quad, resolution):
    report = {"resolution": resolution}
    if closed is not None:
        report["closed_form"] = closed
    if quad is not None:
        report["quadrature"] = quad
    if closed is not None and quad is not None:
        report["abs_diff"] = abs(closed - quad)
    return report


def cmd_integrate(args):
    ifs, cfg = _load_1d(args), _cfg(args)
    closed = fif1d.integrate_closed_form(ifs) if args.method in ("closed", "both") else None
    quad = fif1d.integrate_quadrature(ifs, cfg) if args.method in ("quadrature", "both") else None
    return fio.serialize_report(_integrate_report(closed, quad, cfg.resolution))


def cmd_attractor(args):
    ifs = _load_1d(args)
    if args.method == "chaos":
        try:
            cg = att.ChaosGameConfig(args.seed, args.iterations, args.burn_in, args.weighting)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        pts = att.chaos_game(ifs, cg)
    else:
        if args.depth < 0:
            raise UsageError("--depth must be non-negative")
        pts = att.deterministic_attractor(ifs, att.PointSet.from_data(ifs), args.depth)
    if args.format == "pgm":
        if args.width < 1 or args.height < 1:
            raise UsageError("--width and --height must be positive")
        raster = att.rasterize(pts, args.width, args.height)
        return fio.raster_to_pgm(raster, binary=args.pgm_encoding == "p5")
    return fio.serialize_points(pts)


def cmd_compare(args):
    ifs, cfg = _load_1d(args), _cfg(args)
    return fio.serialize_report(fif1d.compare_with_classical(ifs.data, ifs, cfg))


def cmd_violate(args):
    ifs, cfg = _load_1d(args), _cfg(args)
    if not 1 <= args.cell <= ifs.N:
        raise UsageError(f"--cell must be in 1..{ifs.N}")
    return fio.serialize_report(fif1d.endpoint_violation_experiment(ifs, args.cell, args.delta, cfg))


def cmd_fis2d_build(args):
    grid = fio.parse_grid2d(_read(args.grid))
    return fio.serialize_ifs2d(fis2d.build_ifs2d(grid, _alphas_2d(args.alpha, grid.N, grid.M)))


def cmd_fis2d_eval(args):
    ifs, cfg = _load_2d(args), _cfg(args)
    f = fis2d.fixed_point_2d(ifs, SeamPolicy(args.policy), cfg)
    if args.format == "pgm":
        return fio.surface_to_pgm(f, binary=args.pgm_encoding == "p5")
    return fio.serialize_surface(f)


def cmd_fis2d_check(args):
    ifs, cfg = _load_2d(args), _cfg(args)
    f0 = fis2d.bilinear_interpolant(ifs.grid, cfg.resolution)
    image = fis2d.rb2_apply(ifs, f0, SeamPolicy.RAW_F)
    report = {
        "collinearity": fis2d.check_collinearity(ifs.grid).as_dict(),
        "seams": fis2d.seam_jump_report(image, ifs),
    }
    return fio.serialize_report(report)


def cmd_fis2d_integrate(args):
    ifs, cfg = _load_2d(args), _cfg(args)
    policy = SeamPolicy(args.policy)
    closed = fis2d.integrate2d_closed_form(ifs, policy) if args.method in ("closed", "both") else None
    quad = fis2d.integrate2d_quadrature(ifs, policy, cfg) if args.method in ("quadrature", "both") else None
    report = _integrate_report(closed, quad, cfg.resolution)
    report["policy"] = policy.value
    return fio.serialize_report(report)


COMMANDS = {
    "construct": cmd_construct,
    "eval": cmd_eval,
    "integrate": cmd_integrate,
    "attractor": cmd_attractor,
    "compare": cmd_compare,
    "violate": cmd_violate,
    "fis2d-build": cmd_fis2d_build,
    "fis2d-eval": cmd_fis2d_eval,
    "fis2d-check": cmd_fis2d_check,
    "fis2d-integrate": cmd_fis2d_integrate,
}


def run(argv=None) -> int:
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        blob = COMMANDS[args.command](args)
        _emit(args, blob)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        err.write(str(exc).rstrip("\n") + "\n")
        return EXIT_INVALID
    except NonConvergenceError as exc:
        err.write(f"fifkit: non-convergence: {exc}\n")
        return EXIT_NONCONVERGENCE
    except PolicyError as exc:
        err.write(f"fifkit: {exc}\n")
        if exc.report is not None:
            err.write(fio.serialize_report(exc.report.as_dict()).decode())
        return EXIT_INVALID
    except (FifError, ValueError, IndexError, OSError) as exc:
        err.write(f"fifkit: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
