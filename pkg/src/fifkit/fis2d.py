"""Fractal interpolation surfaces over rectangular grids.

Each cell ``(n, m)`` carries ``w_{n,m}(x, y, z) = (phi_n(x), psi_m(y),
alpha_{n,m} z + q_{n,m}(x, y))`` with the bilinear
``q_{n,m}(x, y) = e x + f y + g x y + k`` fixed by the four corner
conditions.  The operator built from these maps is generally two-valued on
the seams shared by neighbouring cells; :class:`SeamPolicy` chooses how a
lattice point on a seam gets its value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InvalidDataError, InvalidScalingError, NonConvergenceError, PolicyError
from .fif1d import FixedPointConfig
from .ifs1d import check_knots, contraction_maps

_ON_LATTICE = 1e-9


def build_axis_maps(knots) -> tuple:
    """``phi_n`` (or ``psi_m``) for one axis: same closed form as the 1D ``L_n``."""
    return contraction_maps(check_knots(knots, min_intervals=1))


@dataclass(frozen=True)
class GridData2D:
    """Values ``zs[n][m] = f(xs[n], ys[m])`` on a rectangular grid."""

    xs: tuple
    ys: tuple
    zs: tuple

    def __post_init__(self):
        xs = check_knots(self.xs, "xs", min_intervals=1)
        ys = check_knots(self.ys, "ys", min_intervals=1)
        try:
            zs = np.asarray(self.zs, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidDataError("zs must be a matrix of reals") from exc
        if zs.shape != (len(xs), len(ys)):
            raise InvalidDataError(f"zs has shape {zs.shape}, expected ({len(xs)}, {len(ys)})")
        if not np.all(np.isfinite(zs)):
            raise InvalidDataError("zs contains NaN or infinite entries")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "zs", tuple(tuple(row) for row in zs.tolist()))

    @property
    def N(self) -> int:
        return len(self.xs) - 1

    @property
    def M(self) -> int:
        return len(self.ys) - 1

    @cached_property
    def x(self) -> np.ndarray:
        return np.array(self.xs)

    @cached_property
    def y(self) -> np.ndarray:
        return np.array(self.ys)

    @cached_property
    def z(self) -> np.ndarray:
        return np.array(self.zs)

    @property
    def scale(self) -> float:
        return 1.0 + float(np.max(np.abs(self.z)))

    @classmethod
    def from_function(cls, fn, xs, ys) -> "GridData2D":
        X, Y = np.meshgrid(np.asarray(xs, float), np.asarray(ys, float), indexing="ij")
        return cls(tuple(xs), tuple(ys), np.asarray(fn(X, Y), dtype=float))


@dataclass(frozen=True)
class QCoeffs:
    e: float
    f: float
    g: float
    k: float

    def __call__(self, x, y):
        return self.e * x + self.f * y + self.g * x * y + self.k


@dataclass(frozen=True)
class Ifs2D:
    grid: GridData2D
    phis: tuple
    psis: tuple
    alphas: tuple
    qcoeffs: tuple

    def __post_init__(self):
        N, M = self.grid.N, self.grid.M
        object.__setattr__(self, "phis", tuple(self.phis))
        object.__setattr__(self, "psis", tuple(self.psis))
        object.__setattr__(self, "alphas", tuple(tuple(float(a) for a in row) for row in self.alphas))
        object.__setattr__(self, "qcoeffs", tuple(tuple(row) for row in self.qcoeffs))
        if len(self.phis) != N or len(self.psis) != M:
            raise InvalidDataError(f"expected {N} x-maps and {M} y-maps")
        if len(self.alphas) != N or any(len(r) != M for r in self.alphas):
            raise InvalidScalingError(f"alphas must be an {N}x{M} matrix")
        if len(self.qcoeffs) != N or any(len(r) != M for r in self.qcoeffs):
            raise InvalidDataError(f"qcoeffs must be an {N}x{M} matrix")

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def M(self) -> int:
        return self.grid.M

    @cached_property
    def A(self) -> np.ndarray:
        return np.array(self.alphas)

    @cached_property
    def Q(self) -> np.ndarray:
        """``(N, M, 4)`` array of ``(e, f, g, k)``."""
        return np.array([[(c.e, c.f, c.g, c.k) for c in row] for row in self.qcoeffs])

    @cached_property
    def pa(self) -> np.ndarray:
        return np.array([p.a for p in self.phis])

    @cached_property
    def pb(self) -> np.ndarray:
        return np.array([p.b for p in self.phis])

    @cached_property
    def sa(self) -> np.ndarray:
        return np.array([p.a for p in self.psis])

    @cached_property
    def sb(self) -> np.ndarray:
        return np.array([p.b for p in self.psis])

    @property
    def delta(self) -> float:
        return float(np.max(np.abs(self.A)))

    def cell_x(self, x) -> np.ndarray:
        return np.clip(np.searchsorted(self.grid.x, x, side="right") - 1, 0, self.N - 1)

    def cell_y(self, y) -> np.ndarray:
        return np.clip(np.searchsorted(self.grid.y, y, side="right") - 1, 0, self.M - 1)


def _alpha_matrix(alphas, N, M) -> np.ndarray:
    try:
        A = np.broadcast_to(np.asarray(alphas, dtype=float), (N, M))
    except ValueError as exc:
        raise InvalidScalingError(f"alphas must be a scalar or an {N}x{M} matrix") from exc
    if not np.all(np.isfinite(A)) or np.any(np.abs(A) >= 1.0):
        raise InvalidScalingError("every alpha_{n,m} must satisfy |alpha| < 1")
    return np.array(A)


def solve_qnm(grid: GridData2D, alphas) -> tuple:
    """Per-cell ``QCoeffs`` from the four corner conditions.

    ``q_{n,m}`` must equal ``z_target - alpha * z_corner`` at each corner of
    the domain, where the target is the data value at the matching corner of
    cell ``(n, m)``.  The 4x4 system depends only on the domain corners, so
    one factorization serves every cell.
    """
    A = _alpha_matrix(alphas, grid.N, grid.M)
    x0, xN, y0, yM = grid.xs[0], grid.xs[-1], grid.ys[0], grid.ys[-1]
    corners = [(x0, y0), (xN, yM), (x0, yM), (xN, y0)]
    V = np.array([[x, y, x * y, 1.0] for x, y in corners])
    z = grid.z
    zc = np.array([z[0, 0], z[-1, -1], z[0, -1], z[-1, 0]])
    N, M = grid.N, grid.M
    rhs = np.empty((4, N * M))
    for n in range(N):
        for m in range(M):
            targets = (z[n, m], z[n + 1, m + 1], z[n, m + 1], z[n + 1, m])
            rhs[:, n * M + m] = np.array(targets) - A[n, m] * zc
    sol = np.linalg.solve(V, rhs)
    return tuple(
        tuple(QCoeffs(*map(float, sol[:, n * M + m])) for m in range(M)) for n in range(N)
    )


def build_ifs2d(grid: GridData2D, alphas) -> Ifs2D:
    A = _alpha_matrix(alphas, grid.N, grid.M)
    return Ifs2D(
        grid,
        build_axis_maps(grid.xs),
        build_axis_maps(grid.ys),
        tuple(tuple(r) for r in A.tolist()),
        solve_qnm(grid, A),
    )


def corner_residuals(ifs: Ifs2D) -> np.ndarray:
    """``(N, M, 4)`` absolute residuals of the four corner conditions of every cell."""
    g = ifs.grid
    z = g.z
    x0, xN, y0, yM = g.xs[0], g.xs[-1], g.ys[0], g.ys[-1]
    out = np.empty((ifs.N, ifs.M, 4))
    for n in range(ifs.N):
        for m in range(ifs.M):
            a, q = ifs.alphas[n][m], ifs.qcoeffs[n][m]
            out[n, m] = (
                abs(a * z[0, 0] + q(x0, y0) - z[n, m]),
                abs(a * z[-1, -1] + q(xN, yM) - z[n + 1, m + 1]),
                abs(a * z[0, -1] + q(x0, yM) - z[n, m + 1]),
                abs(a * z[-1, 0] + q(xN, y0) - z[n + 1, m]),
            )
    return out


@dataclass(frozen=True)
class CollinearityReport:
    """Largest deviation of each domain side's data from the chord between its end values."""

    deviations: dict
    tol: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def as_dict(self) -> dict:
        return {"deviations": dict(self.deviations), "tol": self.tol, "passed": self.passed}


def _chord_deviation(knots: np.ndarray, values: np.ndarray) -> float:
    lam = (knots - knots[0]) / (knots[-1] - knots[0])
    line = (1.0 - lam) * values[0] + lam * values[-1]
    return float(np.max(np.abs(values - line)))


def check_collinearity(grid: GridData2D, tol: float | None = None) -> CollinearityReport:
    """Check that the data on each of the four domain sides lie on a straight line.

    Side keys are ``x0``, ``xN`` (the vertical sides) and ``y0``, ``yM``.
    The default ``tol`` is ``1e-9 * (1 + max|z|)``.
    """
    if tol is None:
        tol = 1e-9 * grid.scale
    z = grid.z
    dev = {
        "x0": _chord_deviation(grid.y, z[0, :]),
        "xN": _chord_deviation(grid.y, z[-1, :]),
        "y0": _chord_deviation(grid.x, z[:, 0]),
        "yM": _chord_deviation(grid.x, z[:, -1]),
    }
    return CollinearityReport(dev, float(tol))


class SeamPolicy(enum.Enum):
    RAW_F = "raw"
    AVERAGE_G = "average"
    COLLINEAR_BOUNDARY = "collinear"


@dataclass(frozen=True, eq=False)
class SeamTrace:
    """Values of the two cells' branches along one interior seam.

    ``coords`` runs along the seam; ``first`` is the branch of the cell with
    the smaller index, ``second`` that of its neighbour.
    """

    coords: np.ndarray
    first: np.ndarray
    second: np.ndarray

    @property
    def jump(self) -> float:
        return float(np.max(np.abs(self.first - self.second))) if len(self.coords) else 0.0


@dataclass(frozen=True, eq=False)
class GridFunction2D:
    """Samples ``samples[i, j]`` at ``(xs[i], ys[j])`` on a uniform lattice.

    ``seams`` maps ``"x=n"``/``"y=m"`` (1-based interior knot index) to the
    branch values retained by the operator application that produced it.
    """

    xs: np.ndarray
    ys: np.ndarray
    samples: np.ndarray
    seams: dict | None = None
    history: tuple = field(default=())

    def __post_init__(self):
        if self.samples.shape != (len(self.xs), len(self.ys)):
            raise ValueError("samples shape does not match the lattice")

    def __call__(self, x, y):
        return bilinear(self, x, y)


def bilinear(f: GridFunction2D, x, y) -> np.ndarray:
    """Bilinear interpolation on the uniform lattice of ``f``, clamped to the rectangle."""
    xs, ys, S = f.xs, f.ys, f.samples
    P, Q = len(xs) - 1, len(ys) - 1
    fx = np.clip((np.asarray(x, float) - xs[0]) / (xs[-1] - xs[0]) * P, 0.0, P)
    fy = np.clip((np.asarray(y, float) - ys[0]) / (ys[-1] - ys[0]) * Q, 0.0, Q)
    i = np.minimum(np.floor(fx).astype(np.int64), P - 1)
    j = np.minimum(np.floor(fy).astype(np.int64), Q - 1)
    s, r = fx - i, fy - j
    return ((1 - s) * (1 - r) * S[i, j] + s * (1 - r) * S[i + 1, j]
            + (1 - s) * r * S[i, j + 1] + s * r * S[i + 1, j + 1])


def make_lattice(grid: GridData2D, resolution: int) -> tuple:
    xs = np.linspace(grid.xs[0], grid.xs[-1], resolution + 1)
    ys = np.linspace(grid.ys[0], grid.ys[-1], resolution + 1)
    xs[-1], ys[-1] = grid.xs[-1], grid.ys[-1]
    return xs, ys


def bilinear_interpolant(grid: GridData2D, resolution: int) -> GridFunction2D:
    """Piecewise-bilinear interpolant of the data sampled on the lattice."""
    xs, ys = make_lattice(grid, resolution)
    interp = RegularGridInterpolator((grid.x, grid.y), grid.z, method="linear")
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return GridFunction2D(xs, ys, interp((X, Y)))


def branch(ifs: Ifs2D, f: GridFunction2D, n, m, x, y) -> np.ndarray:
    """``F_{n,m}(phi_n^-1(x), psi_m^-1(y), f(...))`` with 0-based (array) cell indices."""
    g = ifs.grid
    u = np.clip((x - ifs.pb[n]) / ifs.pa[n], g.xs[0], g.xs[-1])
    v = np.clip((y - ifs.sb[m]) / ifs.sa[m], g.ys[0], g.ys[-1])
    e, ff, gg, k = (ifs.Q[n, m, c] for c in range(4))
    return ifs.A[n, m] * bilinear(f, u, v) + e * u + ff * v + gg * u * v + k


def _lattice_index(coords: np.ndarray, value: float) -> int | None:
    span = coords[-1] - coords[0]
    i = int(np.argmin(np.abs(coords - value)))
    return i if abs(coords[i] - value) <= _ON_LATTICE * span else None


def _corner_mean(ifs: Ifs2D, f: GridFunction2D, kx: int, ky: int) -> float:
    """Four-way mean at the interior grid node ``(x_kx, y_ky)`` (1-based knot indices)."""
    x, y = ifs.grid.xs[kx], ifs.grid.ys[ky]
    vals = [branch(ifs, f, n, m, x, y) for n in (kx - 1, kx) for m in (ky - 1, ky)]
    return float(np.mean(vals))


def require_policy(ifs: Ifs2D, policy: SeamPolicy) -> None:
    if policy is SeamPolicy.COLLINEAR_BOUNDARY:
        report = check_collinearity(ifs.grid)
        if not report.passed:
            raise PolicyError(
                f"collinear policy needs collinear boundary data; "
                f"max side deviation {report.max_deviation:.3g} > {report.tol:.3g}",
                report=report,
            )


def rb2_apply(ifs: Ifs2D, f: GridFunction2D, policy: SeamPolicy = SeamPolicy.AVERAGE_G) -> GridFunction2D:
    """One application of the surface operator, retaining branch values along every seam.

    ``RAW_F`` and ``COLLINEAR_BOUNDARY`` take the half-open cell's branch at
    seam points; ``AVERAGE_G`` replaces seam values by the mean of the two
    neighbouring branches, and interior grid nodes by the mean of four.
    """
    policy = SeamPolicy(policy)
    require_policy(ifs, policy)
    g = ifs.grid
    X, Y = np.meshgrid(f.xs, f.ys, indexing="ij")
    out = branch(ifs, f, ifs.cell_x(X), ifs.cell_y(Y), X, Y)

    seams = {}
    m_along = ifs.cell_y(f.ys)
    n_along = ifs.cell_x(f.xs)
    for k in range(1, ifs.N):
        xk = g.xs[k]
        seams[f"x={k}"] = SeamTrace(
            f.ys.copy(), branch(ifs, f, k - 1, m_along, xk, f.ys), branch(ifs, f, k, m_along, xk, f.ys)
        )
    for k in range(1, ifs.M):
        yk = g.ys[k]
        seams[f"y={k}"] = SeamTrace(
            f.xs.copy(), branch(ifs, f, n_along, k - 1, f.xs, yk), branch(ifs, f, n_along, k, f.xs, yk)
        )

    if policy is SeamPolicy.AVERAGE_G:
        seams = {key: _averaged(ifs, f, key, tr) for key, tr in seams.items()}
        for key, tr in seams.items():
            axis, k = key.split("=")
            k = int(k)
            if axis == "x":
                i = _lattice_index(f.xs, g.xs[k])
                if i is not None:
                    out[i, :] = tr.first
            else:
                j = _lattice_index(f.ys, g.ys[k])
                if j is not None:
                    out[:, j] = tr.first
    return GridFunction2D(f.xs, f.ys, out, seams)


def _averaged(ifs: Ifs2D, f: GridFunction2D, key: str, tr: SeamTrace) -> SeamTrace:
    axis, k = key.split("=")
    k = int(k)
    avg = 0.5 * (tr.first + tr.second)
    # interior grid nodes on this seam are shared by four cells
    if axis == "x":
        for ky in range(1, ifs.M):
            j = _lattice_index(tr.coords, ifs.grid.ys[ky])
            if j is not None:
                avg[j] = _corner_mean(ifs, f, k, ky)
    else:
        for kx in range(1, ifs.N):
            i = _lattice_index(tr.coords, ifs.grid.xs[kx])
            if i is not None:
                avg[i] = _corner_mean(ifs, f, kx, k)
    return SeamTrace(tr.coords, avg, avg.copy())


def seam_jump_report(f: GridFunction2D, ifs: Ifs2D | None = None) -> dict:
    """Largest branch disagreement along each interior seam, keyed ``x=n`` / ``y=m``."""
    if f.seams is None:
        raise ValueError("function carries no seam branch values; pass an operator image")
    if ifs is not None and len(f.seams) != (ifs.N - 1) + (ifs.M - 1):
        raise ValueError("seam traces do not match the IFS grid")
    return {key: tr.jump for key, tr in sorted(f.seams.items(), key=lambda kv: _seam_order(kv[0]))}


def _seam_order(key: str):
    axis, k = key.split("=")
    return axis, int(k)


def fixed_point_2d(ifs: Ifs2D, policy: SeamPolicy = SeamPolicy.AVERAGE_G,
                   cfg: FixedPointConfig = FixedPointConfig(resolution=512),
                   start: GridFunction2D | None = None) -> GridFunction2D:
    """Iterate :func:`rb2_apply` from the bilinear data interpolant until the sup change is <= ``tol``."""
    policy = SeamPolicy(policy)
    f = start if start is not None else bilinear_interpolant(ifs.grid, cfg.resolution)
    history = []
    for _ in range(cfg.max_iter):
        g = rb2_apply(ifs, f, policy)
        change = float(np.max(np.abs(g.samples - f.samples)))
        history.append(change)
        f = g
        if change <= cfg.tol:
            return GridFunction2D(f.xs, f.ys, f.samples, f.seams, tuple(history))
    raise NonConvergenceError(
        f"no convergence after {cfg.max_iter} iterations (last change {history[-1]:.3g} > tol {cfg.tol:.3g})",
        residual=history[-1],
        iterations=cfg.max_iter,
    )


def knot_residuals_2d(ifs: Ifs2D, f: GridFunction2D) -> np.ndarray:
    X, Y = np.meshgrid(ifs.grid.x, ifs.grid.y, indexing="ij")
    return np.abs(f(X, Y) - ifs.grid.z)


def _box_integral(c: np.ndarray, x0, x1, y0, y1) -> np.ndarray:
    X1, X2 = x1 - x0, (x1**2 - x0**2) / 2.0
    Y1, Y2 = y1 - y0, (y1**2 - y0**2) / 2.0
    return c[..., 0] * X2 * Y1 + c[..., 1] * X1 * Y2 + c[..., 2] * X2 * Y2 + c[..., 3] * X1 * Y1


def integrate2d_closed_form(ifs: Ifs2D, policy: SeamPolicy = SeamPolicy.AVERAGE_G) -> float:
    """Exact integral of the surface, from its self-similarity over the cells.

    ``I = sum a_n c_m (alpha_{n,m} I + iint q_{n,m})`` over the domain
    rectangle, with ``a_n, c_m`` the axis map slopes.  Seams have measure
    zero, but the relation only describes a well-defined surface, so the
    raw policy is refused.
    """
    policy = SeamPolicy(policy)
    if policy is SeamPolicy.RAW_F:
        raise PolicyError("closed-form integral is only offered for a well-defined (non-raw) policy")
    require_policy(ifs, policy)
    g = ifs.grid
    w = np.outer(ifs.pa, ifs.sa)
    iq = _box_integral(ifs.Q, g.xs[0], g.xs[-1], g.ys[0], g.ys[-1])
    denom = 1.0 - float(np.sum(w * ifs.A))
    if not denom > 0:
        raise AssertionError(f"internal error: self-similar denominator {denom} <= 0")
    return float(np.sum(w * iq)) / denom


def midpoint_rule_2d(f: GridFunction2D) -> float:
    """Composite midpoint rule, reading cell centres by bilinear interpolation."""
    S = f.samples
    centre = 0.25 * (S[:-1, :-1] + S[1:, :-1] + S[:-1, 1:] + S[1:, 1:])
    area = np.outer(np.diff(f.xs), np.diff(f.ys))
    return float(np.sum(centre * area))


def integrate2d_quadrature(ifs: Ifs2D, policy: SeamPolicy = SeamPolicy.AVERAGE_G,
                           cfg: FixedPointConfig = FixedPointConfig(resolution=512)) -> float:
    return midpoint_rule_2d(fixed_point_2d(ifs, policy, cfg))


def seam_lambda(knots: np.ndarray, k: int, coords: np.ndarray) -> tuple:
    """Cell index (0-based) and local coordinate ``lambda`` in ``[0, 1]`` for points on an axis."""
    idx = np.clip(np.searchsorted(knots, coords, side="right") - 1, 0, len(knots) - 2)
    lam = (coords - knots[idx]) / (knots[idx + 1] - knots[idx])
    return idx, lam


def collinear_seam_values(ifs: Ifs2D, key: str, coords: np.ndarray) -> np.ndarray:
    """``(1 - lambda) z_{n,m-1} + lambda z_{n,m}`` along seam ``key`` at ``coords``."""
    axis, k = key.split("=")
    k = int(k)
    z = ifs.grid.z
    if axis == "x":
        m, lam = seam_lambda(ifs.grid.y, k, coords)
        return (1 - lam) * z[k, m] + lam * z[k, m + 1]
    n, lam = seam_lambda(ifs.grid.x, k, coords)
    return (1 - lam) * z[n, k] + lam * z[n + 1, k]

