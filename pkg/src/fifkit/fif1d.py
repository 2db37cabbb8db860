"""The fractal interpolation function as a fixed point of the Read-Bajraktarevic operator.

Functions are discretized on a uniform lattice of ``M + 1`` samples over
``[t_0, t_N]``; off-lattice reads of an iterate use linear interpolation.
When every knot lies on the lattice the knot values of the fixed point are
exact, and for uniform knots with ``N | M`` the whole discrete operator is
exact at lattice points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .errors import (
    ContinuityError,
    DomainError,
    InvalidDataError,
    NonConvergenceError,
    PreconditionError,
)
from .ifs1d import DataSet1D, Ifs1D


@dataclass(frozen=True)
class FixedPointConfig:
    """Stopping rule and lattice size for fixed-point iteration.

    ``resolution`` is the number of lattice intervals ``M`` (``M + 1`` samples
    in 1D, ``(M + 1)**2`` in 2D).
    """

    tol: float = 1e-10
    max_iter: int = 200
    resolution: int = 4096

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")


@dataclass(frozen=True, eq=False)
class GridFunction1D:
    """Samples of a function on a uniform lattice.

    ``history`` holds the sup-norm change of each fixed-point step that
    produced this iterate (empty for functions not built by iteration).
    """

    grid: np.ndarray
    samples: np.ndarray
    history: tuple = field(default=())

    def __post_init__(self):
        if self.grid.shape != self.samples.shape or self.grid.ndim != 1:
            raise ValueError("grid and samples must be 1-D arrays of equal length")

    @property
    def M(self) -> int:
        return len(self.grid) - 1

    def __call__(self, t):
        return np.interp(t, self.grid, self.samples)


def make_grid(data: DataSet1D, resolution: int) -> np.ndarray:
    if resolution < data.N:
        raise ValueError(f"resolution {resolution} below number of subintervals {data.N}")
    grid = np.linspace(data.knots[0], data.knots[-1], resolution + 1)
    grid[-1] = data.knots[-1]
    return grid


@dataclass(frozen=True)
class PiecewiseLinear:
    knots: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(float(v) for v in self.knots))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def slopes(self) -> np.ndarray:
        t, x = np.array(self.knots), np.array(self.values)
        return np.diff(x) / np.diff(t)

    @property
    def intercepts(self) -> np.ndarray:
        t, x = np.array(self.knots), np.array(self.values)
        return (x[:-1] * t[1:] - x[1:] * t[:-1]) / np.diff(t)

    def segment(self, n: int, t):
        """Evaluate the affine piece over the ``n``-th (1-based) segment, anywhere."""
        return self.slopes[n - 1] * t + self.intercepts[n - 1]

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)


def build_g0(data: DataSet1D) -> PiecewiseLinear:
    """Piecewise-linear interpolant through the data."""
    if np.any(np.diff(data.t) <= 0):
        raise InvalidDataError("duplicate or unsorted knots")
    return PiecewiseLinear(data.knots, data.values)


def build_chord(data: DataSet1D) -> PiecewiseLinear:
    """The line through the first and last data points."""
    return PiecewiseLinear((data.knots[0], data.knots[-1]), (data.values[0], data.values[-1]))


def sample(data: DataSet1D, fn, resolution: int) -> GridFunction1D:
    grid = make_grid(data, resolution)
    return GridFunction1D(grid, np.asarray(fn(grid), dtype=float))


def _membership_tol(ifs: Ifs1D, f: GridFunction1D) -> float:
    return 1e-9 * (ifs.data.scale + float(np.max(np.abs(f.samples))))


def branch_values(ifs: Ifs1D, f: GridFunction1D):
    """Left and right operator branch values at the interior knots ``t_1..t_{N-1}``.

    The left value comes from ``F_n`` evaluated at ``L_n^{-1}(t_n)`` and the
    right one from ``F_{n+1}`` at ``L_{n+1}^{-1}(t_n)``.
    """
    t = ifs.data.t
    t0, tN = t[0], t[-1]
    n = np.arange(ifs.N - 1)
    interior = t[1:-1]
    ul = np.clip((interior - ifs.b[n]) / ifs.a[n], t0, tN)
    ur = np.clip((interior - ifs.b[n + 1]) / ifs.a[n + 1], t0, tN)
    left = ifs.alphas[n] * f(ul) + ifs.q1[n] * ul + ifs.q0[n]
    right = ifs.alphas[n + 1] * f(ur) + ifs.q1[n + 1] * ur + ifs.q0[n + 1]
    return left, right


def branch_jumps(ifs: Ifs1D, f: GridFunction1D) -> np.ndarray:
    left, right = branch_values(ifs, f)
    return np.abs(left - right)


def rb_apply(ifs: Ifs1D, f: GridFunction1D, strict: bool = True) -> GridFunction1D:
    """One application of the Read-Bajraktarevic operator on the lattice of ``f``.

    With ``strict`` (the default) ``f`` must take the data values at both
    ends of the interval and the two branches at every interior knot must
    agree; ``strict=False`` skips both checks, for perturbed systems.
    """
    d = ifs.data
    if strict:
        tol = _membership_tol(ifs, f)
        if abs(f.samples[0] - d.values[0]) > tol or abs(f.samples[-1] - d.values[-1]) > tol:
            raise DomainError(
                f"f(t0)={f.samples[0]!r}, f(tN)={f.samples[-1]!r} do not match "
                f"data end values {d.values[0]!r}, {d.values[-1]!r}"
            )
        if ifs.N > 1:
            jumps = branch_jumps(ifs, f)
            if np.max(jumps) > tol:
                k = int(np.argmax(jumps)) + 1
                raise ContinuityError(
                    f"operator branches disagree by {jumps[k - 1]:.3g} at knot t_{k}={d.knots[k]!r}"
                )
    grid = f.grid
    idx = ifs.cell_of(grid)
    u = np.clip((grid - ifs.b[idx]) / ifs.a[idx], d.knots[0], d.knots[-1])
    out = ifs.alphas[idx] * f(u) + ifs.q1[idx] * u + ifs.q0[idx]
    return GridFunction1D(grid, out)


def iterate(ifs: Ifs1D, cfg: FixedPointConfig, start: GridFunction1D | None = None,
            strict: bool = True) -> GridFunction1D:
    """Iterate ``rb_apply`` from ``start`` (default: ``g0``) until the sup change is <= ``cfg.tol``."""
    f = start if start is not None else sample(ifs.data, build_g0(ifs.data), cfg.resolution)
    history = []
    for _ in range(cfg.max_iter):
        g = rb_apply(ifs, f, strict=strict)
        change = float(np.max(np.abs(g.samples - f.samples)))
        history.append(change)
        f = g
        if change <= cfg.tol:
            return GridFunction1D(f.grid, f.samples, tuple(history))
    raise NonConvergenceError(
        f"no convergence after {cfg.max_iter} iterations (last change {history[-1]:.3g} > tol {cfg.tol:.3g})",
        residual=history[-1],
        iterations=cfg.max_iter,
    )


def fixed_point(ifs: Ifs1D, cfg: FixedPointConfig = FixedPointConfig()) -> GridFunction1D:
    return iterate(ifs, cfg)


def knot_residual(ifs: Ifs1D, f: GridFunction1D) -> float:
    return float(np.max(np.abs(f(ifs.data.t) - ifs.data.x)))


def eval_exact(ifs: Ifs1D, address, t: float) -> tuple:
    """Exact point of the FIF graph reached from knot ``t`` through ``address``.

    ``address`` is a word ``(n_1, ..., n_k)`` of 1-based cell indices; the
    result is ``w_{n_1} o ... o w_{n_k}(t, x)`` where ``x`` is the data value
    at ``t`` and ``w_n(t, x) = (L_n(t), F_n(t, x))``.
    """
    d = ifs.data
    matches = [i for i, tk in enumerate(d.knots) if tk == t]
    if not matches:
        raise DomainError(f"t={t!r} is not a knot; exact evaluation needs a known value")
    x = d.values[matches[0]]
    for n in reversed(tuple(address)):
        if not 1 <= n <= ifs.N:
            raise DomainError(f"address letter {n} out of range 1..{ifs.N}")
        L, F = ifs.lmaps[n - 1], ifs.vmaps[n - 1]
        t, x = L(t), F(t, x)
    return float(t), float(x)


def check_g0_qn_relation(ifs: Ifs1D, samples: int = 100) -> float:
    """Max residual of ``q_n(L_n^{-1} t) = g0(t) - alpha_n r(L_n^{-1} t)`` over each subinterval."""
    d = ifs.data
    g0, r = build_g0(d), build_chord(d)
    worst = 0.0
    for n in range(1, ifs.N + 1):
        t = np.linspace(d.knots[n - 1], d.knots[n], samples)
        u = ifs.lmaps[n - 1].inverse(t)
        F = ifs.vmaps[n - 1]
        lhs = F.q(u)
        rhs = g0.segment(n, t) - F.alpha * r.segment(1, u)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def _lattice_samples(ifs: Ifs1D, f: GridFunction1D, n: int, samples: int) -> np.ndarray:
    lo, hi = ifs.data.knots[n - 1], ifs.data.knots[n]
    inside = np.flatnonzero((f.grid >= lo) & (f.grid <= hi))
    if len(inside) <= samples:
        return f.grid[inside]
    pick = np.unique(np.round(np.linspace(0, len(inside) - 1, samples)).astype(int))
    return f.grid[inside[pick]]


def check_fixed_point_identity(ifs: Ifs1D, f: GridFunction1D, samples: int = 100) -> float:
    """Max over lattice points of ``|f(t) - g0(t) - alpha_n (f - r)(L_n^{-1} t)|``.

    Up to ``samples`` lattice points are taken from each closed subinterval.
    """
    d = ifs.data
    g0, r = build_g0(d), build_chord(d)
    worst = 0.0
    for n in range(1, ifs.N + 1):
        t = _lattice_samples(ifs, f, n, samples)
        u = np.clip(ifs.lmaps[n - 1].inverse(t), d.knots[0], d.knots[-1])
        resid = f(t) - g0.segment(n, t) - ifs.vmaps[n - 1].alpha * (f(u) - r.segment(1, u))
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def integrate_closed_form(ifs: Ifs1D) -> float:
    """Exact integral of the affine FIF over ``[t_0, t_N]``.

    Integrating the fixed-point relation over each subinterval and changing
    variables gives ``I = sum a_n (alpha_n I + int q_n)``, which is solved
    for ``I``.
    """
    t0, tN = ifs.data.knots[0], ifs.data.knots[-1]
    int_q = ifs.q1 * (tN**2 - t0**2) / 2.0 + ifs.q0 * (tN - t0)
    denom = 1.0 - float(np.sum(ifs.a * ifs.alphas))
    if not denom > 0:
        raise AssertionError(f"internal error: self-similar denominator {denom} <= 0")
    return float(np.sum(ifs.a * int_q)) / denom


def midpoint_rule(f: GridFunction1D) -> float:
    """Composite midpoint rule over the lattice cells, reading ``f`` by linear interpolation."""
    mids = 0.5 * (f.grid[:-1] + f.grid[1:])
    return float(np.sum(f(mids) * np.diff(f.grid)))


def integrate_quadrature(ifs: Ifs1D, cfg: FixedPointConfig = FixedPointConfig()) -> float:
    """Midpoint-rule integral of the lattice fixed point.

    The integrand is continuous but nowhere smooth in general, so the error
    is only first order in the lattice spacing.
    """
    return midpoint_rule(fixed_point(ifs, cfg))


@dataclass(frozen=True)
class ComparisonReport:
    sup_diff: float
    w_f: float
    alpha_inf: float
    f_inf: float
    bound_rhs: float
    bound_holds: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def modulus_of_continuity(f: GridFunction1D, h: float) -> float:
    """Largest ``|f(u) - f(v)|`` over lattice pairs with ``|u - v| <= h``."""
    dx = (f.grid[-1] - f.grid[0]) / f.M
    width = int(np.floor(h / dx + 1e-9)) + 1
    # edge windows are clipped by mode="nearest", so each is a subset of a full window
    hi = maximum_filter1d(f.samples, width, mode="nearest")
    lo = minimum_filter1d(f.samples, width, mode="nearest")
    return float(np.max(hi - lo))


def compare_with_classical(data: DataSet1D, ifs: Ifs1D,
                           cfg: FixedPointConfig = FixedPointConfig()) -> ComparisonReport:
    """Sup distance between the FIF and the piecewise-linear interpolant, with its a priori bound.

    The bound is ``w(h) + 2|alpha|/(1-|alpha|) * ||g0||`` where ``g0`` is the
    classical interpolant, ``w`` its modulus of continuity and ``h`` the
    constant knot spacing; ``|alpha|`` is taken from ``ifs``.
    """
    if not data.is_uniform():
        raise PreconditionError("comparison bound needs uniformly spaced knots")
    fif = fixed_point(ifs, cfg)
    g0 = GridFunction1D(fif.grid, build_g0(data)(fif.grid))
    h = data.span / data.N
    sup_diff = float(np.max(np.abs(fif.samples - g0.samples)))
    w = modulus_of_continuity(g0, h)
    a_inf = ifs.delta
    f_inf = float(np.max(np.abs(g0.samples)))
    rhs = w + 2.0 * a_inf / (1.0 - a_inf) * f_inf
    return ComparisonReport(sup_diff, w, a_inf, f_inf, rhs, bool(sup_diff <= rhs))


@dataclass(frozen=True)
class ViolationReport:
    knot_residual: float
    max_jump: float
    integral_shift: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def endpoint_violation_experiment(ifs: Ifs1D, n: int, delta: float,
                                  cfg: FixedPointConfig = FixedPointConfig()) -> ViolationReport:
    """Shift ``q_n0`` by ``delta`` and measure what breaks.

    ``max_jump`` is the largest branch disagreement at an interior knot when
    the perturbed operator is applied to the original (continuous) FIF;
    ``knot_residual`` is how far the perturbed system's lattice fixed point
    misses the data; ``integral_shift`` is the change of the closed-form
    integral.
    """
    if not 1 <= n <= ifs.N:
        raise IndexError(f"cell index {n} out of range 1..{ifs.N}")
    bad = ifs.with_vmap(n, q0=ifs.vmaps[n - 1].q0 + delta)
    f = fixed_point(ifs, cfg)
    jumps = branch_jumps(bad, f) if ifs.N > 1 else np.zeros(1)
    g = iterate(bad, cfg, strict=False)
    span = ifs.data.span
    shift = ifs.a[n - 1] * delta * span / (1.0 - float(np.sum(ifs.a * ifs.alphas)))
    return ViolationReport(
        knot_residual=knot_residual(ifs, g),
        max_jump=float(np.max(jumps)),
        integral_shift=float(shift),
    )
