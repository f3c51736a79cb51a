"""Empirical covariance, its quadrature-weighted eigendecomposition, and
standardized principal component scores.

The covariance uses divisor n, so scores of the training curves come out with
sample mean 0 and sample variance (divisor n) exactly 1 for every component
with a nonzero eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Curve, FunctionalSample, Grid

__all__ = [
    "FpcaModel",
    "estimate_covariance",
    "decompose",
    "project_scores",
    "variance_explained",
    "fit_fpca",
]

# Components with eigenvalue below this fraction of the largest are treated as
# null: their scores are reported as NaN ("absent"), never divided by ~0.
EIGENVALUE_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class FpcaModel:
    """Eigenstructure of an empirical covariance on a grid.

    eigenvalues are sorted non-increasing and clamped at 0; eigenfunctions
    (rows of an (J, m) array) are orthonormal under the grid's quadrature;
    scores is the (n, J) standardized score matrix of the training curves,
    or None for a decomposition without data.
    """

    grid: Grid
    mean: Curve
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    scores: np.ndarray | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ef = np.asarray(self.eigenfunctions, dtype=float)
        if ev.ndim != 1 or ef.shape != (ev.size, len(self.grid)):
            raise ValueError("eigenvalues and eigenfunctions have inconsistent shapes")
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted non-increasing")
        if np.any(ev < 0):
            raise ValueError("eigenvalues must be clamped at 0")
        ev.setflags(write=False)
        ef.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "eigenfunctions", ef)

    @property
    def n_components(self) -> int:
        return self.eigenvalues.size

    def eigenfunction(self, j: int) -> Curve:
        """j-th eigenfunction as a Curve; j is 1-based."""
        return Curve(self.grid, self.eigenfunctions[j - 1])

    @property
    def null_components(self) -> np.ndarray:
        """Boolean mask of components whose eigenvalue sits below the floor."""
        top = self.eigenvalues[0] if self.eigenvalues.size else 0.0
        return self.eigenvalues < EIGENVALUE_FLOOR_REL * top if top > 0 else np.ones_like(self.eigenvalues, bool)


def estimate_covariance(s: FunctionalSample) -> np.ndarray:
    """Empirical covariance matrix K(s,t) with divisor n; symmetric PSD."""
    if s.n < 2:
        raise ValueError("covariance needs at least 2 curves")
    xc = s.values - s.values.mean(axis=0)
    cov = xc.T @ xc / s.n
    return 0.5 * (cov + cov.T)  # BLAS products are not exactly symmetric


def _apply_sign_convention(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Flip so the quadrature integral of each eigenfunction is positive; when
    # that functional is ~0, make the largest-magnitude entry positive.
    for j in range(psi.shape[0]):
        s = float(np.sum(weights * psi[j]))
        if abs(s) > 1e-10:
            if s < 0:
                psi[j] = -psi[j]
        elif psi[j][int(np.argmax(np.abs(psi[j])))] < 0:
            psi[j] = -psi[j]
    return psi


def decompose(cov: np.ndarray, grid: Grid, J: int, mean: Curve | None = None) -> FpcaModel:
    """Solve the weighted eigenproblem int K(s,t) psi(t) dt = theta psi(s).

    The problem is symmetrized with the square-root quadrature-weight diagonal
    so a standard symmetric solver applies, then un-weighted and normalized so
    the eigenfunctions are orthonormal under the grid's quadrature. The
    decomposition is deterministic: identical input bytes give identical
    output bytes.
    """
    cov = np.asarray(cov, dtype=float)
    m = len(grid)
    if cov.shape != (m, m):
        raise ValueError("covariance shape must match the grid")
    if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, float(np.max(np.abs(cov)))):
        raise ValueError("covariance must be symmetric")
    if not 1 <= J <= m:
        raise ValueError("J must satisfy 1 <= J <= m")

    sw = np.sqrt(grid.weights)
    sym = sw[:, None] * cov * sw[None, :]
    sym = 0.5 * (sym + sym.T)
    evals, evecs = np.linalg.eigh(sym)
    order = np.argsort(evals)[::-1][:J]
    theta = evals[order]
    if np.any(theta < -1e-10 * max(1.0, abs(float(evals[-1])), abs(float(evals[0])))):
        raise ValueError("covariance is significantly indefinite")
    theta = np.clip(theta, 0.0, None)
    psi = (evecs[:, order] / sw[:, None]).T
    psi = _apply_sign_convention(psi, grid.weights)
    if mean is None:
        mean = Curve(grid, np.zeros(m))
    return FpcaModel(grid=grid, mean=mean, eigenvalues=theta, eigenfunctions=psi)


def project_scores(model: FpcaModel, x: Curve) -> np.ndarray:
    """Standardized scores of a curve: theta_j^{-1/2} <x - mean, psi_j>.

    Null components (eigenvalue below the floor) are reported as NaN, not 0.
    """
    if x.grid is not model.grid and x.grid != model.grid:
        raise ValueError("curve is not on the model grid")
    centered = x.values - model.mean.values
    raw = model.eigenfunctions @ (model.grid.weights * centered)
    null = model.null_components
    out = np.full(model.n_components, np.nan)
    out[~null] = raw[~null] / np.sqrt(model.eigenvalues[~null])
    return out


def _score_matrix(model: FpcaModel, values: np.ndarray) -> np.ndarray:
    centered = values - model.mean.values
    raw = (centered * model.grid.weights) @ model.eigenfunctions.T
    null = model.null_components
    out = np.full(raw.shape, np.nan)
    out[:, ~null] = raw[:, ~null] / np.sqrt(model.eigenvalues[~null])
    return out


def variance_explained(model: FpcaModel, j: int) -> float:
    """Cumulative proportion of variance carried by the first j components."""
    if not 1 <= j <= model.n_components:
        raise ValueError("j must satisfy 1 <= j <= J")
    total = float(model.eigenvalues.sum())
    if total <= 0:
        raise ValueError("total variance is zero")
    return float(model.eigenvalues[:j].sum()) / total


def fit_fpca(s: FunctionalSample, J: int | None = None) -> FpcaModel:
    """Full pipeline: center, covariance, eigendecomposition, training scores.

    J defaults to min(n, m, 20).
    """
    if J is None:
        J = min(s.n, len(s.grid), 20)
    if J > min(s.n, len(s.grid)):
        raise ValueError("J must not exceed min(n, m)")
    cov = estimate_covariance(s)
    mean = Curve(s.grid, s.values.mean(axis=0))
    model = decompose(cov, s.grid, J, mean=mean)
    scores = _score_matrix(model, s.values)
    return FpcaModel(
        grid=model.grid,
        mean=mean,
        eigenvalues=model.eigenvalues,
        eigenfunctions=model.eigenfunctions,
        scores=scores,
    )
