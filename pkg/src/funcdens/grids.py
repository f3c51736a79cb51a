"""Discretized function space: grids, trapezoid quadrature, inner products.

Curves live on a shared quadrature grid over a compact interval. All inner
products and distances below are trapezoid-rule approximations of their L2
counterparts; the rule is exact for integrands that are linear on each cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Curve",
    "FunctionalSample",
    "inner_product",
    "l2_distance",
    "center_sample",
]


def _trapezoid_weights(points: np.ndarray) -> np.ndarray:
    w = np.empty_like(points)
    w[0] = 0.5 * (points[1] - points[0])
    w[-1] = 0.5 * (points[-1] - points[-2])
    w[1:-1] = 0.5 * (points[2:] - points[:-2])
    return w


@dataclass(frozen=True)
class Grid:
    """Ordered abscissae with trapezoid quadrature weights; immutable."""

    points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least 2 points in a 1-d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        w = _trapezoid_weights(pts) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != pts.shape or np.any(w <= 0):
            raise ValueError("weights must be positive and match the points")
        if abs(w.sum() - (pts[-1] - pts[0])) > 1e-12 * max(1.0, pts[-1] - pts[0]):
            raise ValueError("weights must sum to the interval length")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, a: float, b: float, m: int) -> "Grid":
        return cls(np.linspace(a, b, m))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.shape[0], float(self.points[0]), float(self.points[-1])))


def _require_same_grid(a, b) -> Grid:
    if a.grid is not b.grid and a.grid != b.grid:
        raise ValueError("curves are on different grids")
    return a.grid


@dataclass(frozen=True)
class Curve:
    """Function values on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.points.shape:
            raise ValueError("values length must equal grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "Curve") -> "Curve":
        _require_same_grid(self, other)
        return Curve(self.grid, self.values + other.values)

    def __sub__(self, other: "Curve") -> "Curve":
        _require_same_grid(self, other)
        return Curve(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Curve":
        return Curve(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class FunctionalSample:
    """n curves sharing one grid, stored as an (n, m) value matrix."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("sample needs an (n, m) matrix with n >= 1")
        if v.shape[1] != len(self.grid):
            raise ValueError("curve length must equal grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_curves(cls, curves: list[Curve]) -> "FunctionalSample":
        if not curves:
            raise ValueError("sample needs at least one curve")
        grid = curves[0].grid
        for c in curves[1:]:
            _require_same_grid(curves[0], c)
        return cls(grid, np.vstack([c.values for c in curves]))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def curve(self, i: int) -> Curve:
        return Curve(self.grid, self.values[i])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return (self.curve(i) for i in range(self.n))


def inner_product(f: Curve, g: Curve) -> float:
    """Quadrature inner product sum_t w[t] f[t] g[t]; symmetric, bilinear."""
    grid = _require_same_grid(f, g)
    return float(np.sum(grid.weights * f.values * g.values))


def l2_distance(f: Curve, g: Curve) -> float:
    """Quadrature L2 distance; zero iff f and g agree pointwise."""
    grid = _require_same_grid(f, g)
    d = f.values - g.values
    return float(np.sqrt(np.sum(grid.weights * d * d)))


def center_sample(s: FunctionalSample) -> tuple[Curve, FunctionalSample]:
    """Split a sample into its pointwise mean curve and the centered rows."""
    mean = s.values.mean(axis=0)
    return Curve(s.grid, mean), FunctionalSample(s.grid, s.values - mean)
