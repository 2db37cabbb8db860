"""Affine iterated function systems on an interval.

An IFS for data ``{(t_n, x_n)}`` is a list of pairs ``(L_n, F_n)`` where
``L_n(t) = a_n t + b_n`` maps ``[t_0, t_N]`` onto ``[t_{n-1}, t_n]`` and
``F_n(t, x) = alpha_n x + q_n1 t + q_n0`` maps the data end points onto
``x_{n-1}`` and ``x_n``.  Cell indices ``n`` are 1-based throughout, to
match the usual indexing of subintervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidDataError, InvalidScalingError

DEFAULT_TOL = 1e-9


def _finite_tuple(values, what):
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise InvalidDataError(f"{what} must be a sequence of reals") from exc
    if not all(math.isfinite(v) for v in out):
        raise InvalidDataError(f"{what} contains NaN or infinite entries")
    return out


def check_knots(knots: Sequence[float], what: str = "knots", min_intervals: int = 2) -> tuple:
    knots = _finite_tuple(knots, what)
    if len(knots) < min_intervals + 1:
        raise InvalidDataError(
            f"need at least {min_intervals + 1} {what} (N >= {min_intervals}), got {len(knots)}"
        )
    for i in range(1, len(knots)):
        if not knots[i] > knots[i - 1]:
            raise InvalidDataError(
                f"{what} must be strictly increasing: "
                f"{what}[{i - 1}]={knots[i - 1]!r}, {what}[{i}]={knots[i]!r}"
            )
    return knots


@dataclass(frozen=True)
class DataSet1D:
    """Interpolation data: knots ``t_0 < ... < t_N`` and values ``x_0..x_N``."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        knots = check_knots(self.knots)
        values = _finite_tuple(self.values, "values")
        if len(values) != len(knots):
            raise InvalidDataError(
                f"knots and values differ in length ({len(knots)} vs {len(values)})"
            )
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return len(self.knots) - 1

    @cached_property
    def t(self) -> np.ndarray:
        return np.array(self.knots)

    @cached_property
    def x(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def span(self) -> float:
        return self.knots[-1] - self.knots[0]

    @property
    def scale(self) -> float:
        """``1 + max|x|``, the magnitude used for relative tolerances."""
        return 1.0 + max(abs(v) for v in self.values)

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        h = np.diff(self.t)
        return bool(np.all(np.abs(h - h[0]) <= rtol * self.span))


@dataclass(frozen=True)
class AffineMap1D:
    a: float
    b: float

    def __call__(self, t):
        return self.a * t + self.b

    def inverse(self, t):
        return (t - self.b) / self.a


@dataclass(frozen=True)
class VerticalMap1D:
    """``F(t, x) = alpha * x + q1 * t + q0``."""

    alpha: float
    q1: float
    q0: float

    def __call__(self, t, x):
        return self.alpha * x + self.q1 * t + self.q0

    def q(self, t):
        return self.q1 * t + self.q0


@dataclass(frozen=True)
class Ifs1D:
    """The pairs ``(L_n, F_n)`` together with the data they were built from.

    Construction does not enforce the end point conditions, so perturbed
    systems can be built for experiments; use :func:`validate_ifs` to check.
    """

    data: DataSet1D
    lmaps: tuple = field()
    vmaps: tuple = field()

    def __post_init__(self):
        object.__setattr__(self, "lmaps", tuple(self.lmaps))
        object.__setattr__(self, "vmaps", tuple(self.vmaps))
        N = self.data.N
        if len(self.lmaps) != N or len(self.vmaps) != N:
            raise InvalidDataError(
                f"expected {N} maps, got {len(self.lmaps)} L-maps and {len(self.vmaps)} F-maps"
            )
        for m in self.lmaps:
            if not (math.isfinite(m.a) and math.isfinite(m.b)) or m.a == 0.0:
                raise InvalidDataError(f"L-map {m} is not an invertible finite affine map")
        for v in self.vmaps:
            if not all(math.isfinite(c) for c in (v.alpha, v.q1, v.q0)):
                raise InvalidDataError(f"F-map {v} has non-finite coefficients")

    @classmethod
    def from_raw(cls, data, a, b, alphas, q1, q0) -> "Ifs1D":
        """Assemble an IFS from raw coefficient sequences, without solving anything."""
        lmaps = [AffineMap1D(float(ai), float(bi)) for ai, bi in zip(a, b)]
        vmaps = [VerticalMap1D(float(al), float(c1), float(c0)) for al, c1, c0 in zip(alphas, q1, q0)]
        return cls(data, tuple(lmaps), tuple(vmaps))

    @property
    def N(self) -> int:
        return self.data.N

    @cached_property
    def a(self) -> np.ndarray:
        return np.array([m.a for m in self.lmaps])

    @cached_property
    def b(self) -> np.ndarray:
        return np.array([m.b for m in self.lmaps])

    @cached_property
    def alphas(self) -> np.ndarray:
        return np.array([v.alpha for v in self.vmaps])

    @cached_property
    def q1(self) -> np.ndarray:
        return np.array([v.q1 for v in self.vmaps])

    @cached_property
    def q0(self) -> np.ndarray:
        return np.array([v.q0 for v in self.vmaps])

    @property
    def s(self) -> float:
        """Contractivity of the domain maps, ``max a_n``."""
        return float(np.max(np.abs(self.a)))

    @property
    def delta(self) -> float:
        """Contraction factor of the operator in the output argument, ``max |alpha_n|``."""
        return float(np.max(np.abs(self.alphas)))

    def with_vmap(self, n: int, **changes) -> "Ifs1D":
        """Copy with the ``n``-th (1-based) vertical map's fields replaced."""
        if not 1 <= n <= self.N:
            raise IndexError(f"cell index {n} out of range 1..{self.N}")
        vmaps = list(self.vmaps)
        vmaps[n - 1] = replace(vmaps[n - 1], **changes)
        return Ifs1D(self.data, self.lmaps, tuple(vmaps))

    def cell_of(self, t) -> np.ndarray:
        """0-based cell index of each ``t``; ``[t_{n-1}, t_n)`` with ``t_N`` in the last cell."""
        idx = np.searchsorted(self.data.t, t, side="right") - 1
        return np.clip(idx, 0, self.N - 1)


def check_alphas(alphas: Sequence[float], N: int) -> tuple:
    try:
        alphas = tuple(float(a) for a in alphas)
    except (TypeError, ValueError) as exc:
        raise InvalidScalingError("scaling factors must be reals") from exc
    if len(alphas) != N:
        raise InvalidScalingError(f"expected {N} scaling factors, got {len(alphas)}")
    for i, a in enumerate(alphas, start=1):
        if not (math.isfinite(a) and abs(a) < 1.0):
            raise InvalidScalingError(f"scaling factor alpha_{i}={a!r} must satisfy |alpha| < 1")
    return alphas


def contraction_maps(knots: Sequence[float]) -> tuple:
    """Affine maps sending ``[k_0, k_N]`` onto each ``[k_{n-1}, k_n]``, orientation kept."""
    k0, kN = knots[0], knots[-1]
    span = kN - k0
    return tuple(
        AffineMap1D((knots[n] - knots[n - 1]) / span, (kN * knots[n - 1] - k0 * knots[n]) / span)
        for n in range(1, len(knots))
    )


def build_lmaps(data: DataSet1D) -> tuple:
    """Domain contractions with ``L_n(t_0) = t_{n-1}`` and ``L_n(t_N) = t_n``."""
    return contraction_maps(data.knots)


def solve_qn(data: DataSet1D, alphas: Sequence[float]) -> tuple:
    """Solve ``F_n(t_0, x_0) = x_{n-1}`` and ``F_n(t_N, x_N) = x_n`` for ``q_n1, q_n0``."""
    alphas = check_alphas(alphas, data.N)
    t0, tN = data.knots[0], data.knots[-1]
    x = data.values
    x0, xN = x[0], x[-1]
    out = []
    for n in range(1, data.N + 1):
        al = alphas[n - 1]
        q1 = (x[n] - x[n - 1] - al * (xN - x0)) / (tN - t0)
        q0 = x[n - 1] - al * x0 - q1 * t0
        out.append(VerticalMap1D(al, q1, q0))
    return tuple(out)


def build_ifs(data: DataSet1D, alphas: Sequence[float]) -> Ifs1D:
    return Ifs1D(data, build_lmaps(data), solve_qn(data, alphas))


@dataclass(frozen=True)
class ValidationReport:
    """Per-cell end point residuals and contraction factors.

    ``residuals[n-1]`` holds ``(L_n(t_0)-t_{n-1}, L_n(t_N)-t_n,
    F_n(t_0,x_0)-x_{n-1}, F_n(t_N,x_N)-x_n)`` as absolute values.
    """

    residuals: tuple
    lmap_factors: tuple
    vmap_factors: tuple
    tol: float

    @property
    def max_residual(self) -> float:
        return max(max(r) for r in self.residuals)

    @property
    def contractive(self) -> bool:
        return all(f < 1.0 for f in self.lmap_factors) and all(f < 1.0 for f in self.vmap_factors)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.contractive

    def failures(self) -> list:
        msgs = []
        names = ("L(t0)", "L(tN)", "F(t0,x0)", "F(tN,xN)")
        for n, res in enumerate(self.residuals, start=1):
            for name, r in zip(names, res):
                if r > self.tol:
                    msgs.append(f"cell {n}: {name} residual {r:.3g} > {self.tol:.3g}")
        for n, (fa, fv) in enumerate(zip(self.lmap_factors, self.vmap_factors), start=1):
            if fa >= 1.0:
                msgs.append(f"cell {n}: non-contractive L-map, |a|={fa}")
            if fv >= 1.0:
                msgs.append(f"cell {n}: non-contractive F-map, |alpha|={fv}")
        return msgs


def validate_ifs(ifs: Ifs1D, tol: float = DEFAULT_TOL) -> ValidationReport:
    d = ifs.data
    t, x = d.knots, d.values
    residuals = []
    for n, (L, F) in enumerate(zip(ifs.lmaps, ifs.vmaps), start=1):
        residuals.append((
            abs(L(t[0]) - t[n - 1]),
            abs(L(t[-1]) - t[n]),
            abs(F(t[0], x[0]) - x[n - 1]),
            abs(F(t[-1], x[-1]) - x[n]),
        ))
    return ValidationReport(
        residuals=tuple(residuals),
        lmap_factors=tuple(abs(L.a) for L in ifs.lmaps),
        vmap_factors=tuple(abs(F.alpha) for F in ifs.vmaps),
        tol=tol,
    )
