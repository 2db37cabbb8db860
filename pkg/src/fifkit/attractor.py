"""Attractors of a 1D IFS as point sets: Hutchinson iteration, chaos game, rasters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DomainError, ResourceError
from .fif1d import GridFunction1D
from .ifs1d import Ifs1D

SNAP_THRESHOLD = 10**6
MAX_POINTS = 2 * 10**7
DEFAULT_SNAP = 2**12


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite set of ``(t, x)`` points stored as a ``(K, 2)`` array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise DomainError("point set contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_data(cls, ifs: Ifs1D) -> "PointSet":
        return cls(np.column_stack([ifs.data.t, ifs.data.x]))

    def canonical(self) -> "PointSet":
        """Lexicographically sorted copy, for order-independent comparison."""
        order = np.lexsort((self.points[:, 1], self.points[:, 0]))
        return PointSet(self.points[order])

    def bounds(self) -> tuple:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def diameter(self) -> float:
        t0, t1, x0, x1 = self.bounds()
        return float(np.hypot(t1 - t0, x1 - x0))


@dataclass(frozen=True)
class ChaosGameConfig:
    seed: int = 0
    iterations: int = 100_000
    burn_in: int = 100
    weighting: str = "uniform"

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.burn_in < 0 or self.iterations <= self.burn_in:
            raise ValueError(f"need iterations > burn_in >= 0, got {self.iterations}, {self.burn_in}")
        if self.weighting not in ("uniform", "area"):
            raise ValueError(f"unknown weighting {self.weighting!r}")


def apply_map(ifs: Ifs1D, n: int, pts: np.ndarray) -> np.ndarray:
    """``w_n(t, x) = (L_n(t), F_n(t, x))`` for a 1-based ``n``, row-wise."""
    L, F = ifs.lmaps[n - 1], ifs.vmaps[n - 1]
    t, x = pts[:, 0], pts[:, 1]
    return np.column_stack([L(t), F(t, x)])


def hutchinson_step(ifs: Ifs1D, B: PointSet) -> PointSet:
    """Union of the images of ``B`` under every map, map-major order, no deduplication."""
    if len(B) == 0:
        raise DomainError("Hutchinson step of an empty set")
    return PointSet(np.vstack([apply_map(ifs, n, B.points) for n in range(1, ifs.N + 1)]))


def snap(B: PointSet, cells: int = DEFAULT_SNAP) -> PointSet:
    """Keep one representative (the first) per cell of a ``cells x cells`` grid over the bbox."""
    t0, t1, x0, x1 = B.bounds()
    pts = B.points
    i = np.floor((pts[:, 0] - t0) / max(t1 - t0, 1e-300) * cells).clip(0, cells - 1).astype(np.int64)
    j = np.floor((pts[:, 1] - x0) / max(x1 - x0, 1e-300) * cells).clip(0, cells - 1).astype(np.int64)
    _, first = np.unique(i * cells + j, return_index=True)
    return PointSet(pts[np.sort(first)])


def deterministic_attractor(ifs: Ifs1D, B0: PointSet, k: int, snap_cells: int | None = DEFAULT_SNAP,
                            max_points: int = MAX_POINTS) -> PointSet:
    """``k`` Hutchinson steps from ``B0``.

    Grid snapping kicks in once a step would produce more than ``10**6``
    points; with ``snap_cells=None`` it is disabled and exceeding
    ``max_points`` raises :class:`ResourceError`.
    """
    if len(B0) == 0:
        raise DomainError("initial set is empty")
    B = B0
    for _ in range(k):
        if ifs.N * len(B) > SNAP_THRESHOLD and snap_cells is not None:
            B = snap(B, snap_cells)
        if ifs.N * len(B) > max_points:
            raise ResourceError(f"next step would hold {ifs.N * len(B)} points (limit {max_points})")
        B = hutchinson_step(ifs, B)
    return B


def chaos_game(ifs: Ifs1D, cfg: ChaosGameConfig = ChaosGameConfig()) -> PointSet:
    """Random iteration from ``(t_0, x_0)``; the first ``burn_in`` points are dropped.

    Map indices are drawn from ``numpy.random.default_rng(seed)``, uniformly
    or (``weighting="area"``) with probabilities ``a_n``.
    """
    rng = np.random.default_rng(cfg.seed)
    p = None if cfg.weighting == "uniform" else ifs.a / ifs.a.sum()
    choice = rng.choice(ifs.N, size=cfg.iterations, p=p)
    a, b = ifs.a.tolist(), ifs.b.tolist()
    al, q1, q0 = ifs.alphas.tolist(), ifs.q1.tolist(), ifs.q0.tolist()
    t, x = ifs.data.knots[0], ifs.data.values[0]
    out = np.empty((cfg.iterations, 2))
    for i, n in enumerate(choice.tolist()):
        t, x = a[n] * t + b[n], al[n] * x + q1[n] * t + q0[n]
        out[i] = t, x
    return PointSet(out[cfg.burn_in:])


def directed_hausdorff(A: np.ndarray, B: np.ndarray, chunk: int = 1024) -> float:
    worst = 0.0
    for i in range(0, len(A), chunk):
        d2 = cdist(A[i:i + chunk], B, "sqeuclidean")
        worst = max(worst, float(d2.min(axis=1).max()))
    return float(np.sqrt(worst))


def hausdorff_distance(A: PointSet, B: PointSet) -> float:
    """Symmetric Euclidean Hausdorff distance, brute force over all pairs."""
    if len(A) == 0 or len(B) == 0:
        raise DomainError("Hausdorff distance of an empty set")
    return max(directed_hausdorff(A.points, B.points), directed_hausdorff(B.points, A.points))


def euclidean_factor(ifs: Ifs1D) -> float:
    """Largest Euclidean Lipschitz constant among the maps ``w_n``.

    ``w_n`` has linear part ``[[a_n, 0], [q_n1, alpha_n]]``; its spectral
    norm can exceed ``max(a_n, |alpha_n|)`` and even 1.
    """
    norms = [np.linalg.norm([[L.a, 0.0], [F.q1, F.alpha]], 2) for L, F in zip(ifs.lmaps, ifs.vmaps)]
    return float(max(norms))


def graph_coincidence_check(ifs: Ifs1D, f: GridFunction1D, k: int, B0: PointSet | None = None) -> float:
    """Max ``|x - f(t)|`` over the ``k``-th Hutchinson iterate of ``B0`` (default: the data points)."""
    B = deterministic_attractor(ifs, B0 if B0 is not None else PointSet.from_data(ifs), k)
    t, x = B.points[:, 0], B.points[:, 1]
    return float(np.max(np.abs(x - f(t))))


@dataclass(frozen=True, eq=False)
class Raster:
    """Visit counts; row 0 is the top (largest ``x``), column 0 the smallest ``t``."""

    width: int
    height: int
    cells: np.ndarray
    bounds: tuple

    def __post_init__(self):
        if self.cells.shape != (self.height, self.width):
            raise ValueError(f"cells shape {self.cells.shape} != ({self.height}, {self.width})")

    @property
    def occupied(self) -> np.ndarray:
        return self.cells > 0

    def gray(self, maxval: int = 255) -> np.ndarray:
        peak = self.cells.max()
        if peak == 0:
            return np.zeros_like(self.cells, dtype=np.int64)
        return np.rint(self.cells * (maxval / peak)).astype(np.int64)


def rasterize(points: PointSet, width: int, height: int, bounds: tuple | None = None) -> Raster:
    """Bin points into a ``width x height`` count matrix over ``bounds`` (default: tight bbox).

    A zero-extent side of the box is widened by half a unit on each side.
    """
    if len(points) == 0:
        raise DomainError("cannot rasterize an empty point set")
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be positive")
    t0, t1, x0, x1 = bounds if bounds is not None else points.bounds()
    if t1 <= t0:
        t0, t1 = t0 - 0.5, t1 + 0.5
    if x1 <= x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pts = points.points
    col = np.floor((pts[:, 0] - t0) / (t1 - t0) * width).astype(np.int64).clip(0, width - 1)
    row = np.floor((pts[:, 1] - x0) / (x1 - x0) * height).astype(np.int64).clip(0, height - 1)
    row = height - 1 - row
    cells = np.zeros((height, width), dtype=np.int64)
    np.add.at(cells, (row, col), 1)
    return Raster(width, height, cells, (float(t0), float(t1), float(x0), float(x1)))


def union_bounds(*sets: PointSet) -> tuple:
    b = np.array([s.bounds() for s in sets])
    return float(b[:, 0].min()), float(b[:, 1].max()), float(b[:, 2].min()), float(b[:, 3].max())


def raster_disagreement(r1: Raster, r2: Raster) -> float:
    """Fraction of cells occupied in exactly one raster, relative to cells occupied in either."""
    a, b = r1.occupied, r2.occupied
    union = np.count_nonzero(a | b)
    return np.count_nonzero(a ^ b) / union if union else 0.0
