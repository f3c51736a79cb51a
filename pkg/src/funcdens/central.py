"""Central tendency for samples of curves: mean, modal curve built from
per-component score-density modes, a multivariate-KDE comparison estimator,
and the spatial-median curve via Weiszfeld iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fpca import FpcaModel
from .grids import Curve, FunctionalSample
from .kde import ScoreDensityEstimator, bandwidth_normal_reference

__all__ = [
    "mean_curve",
    "modal_curve",
    "multivariate_modal_curve",
    "median_curve",
    "MedianResult",
    "CentralCurveSet",
    "central_curves",
]


def mean_curve(s: FunctionalSample) -> Curve:
    """Pointwise average curve."""
    return Curve(s.grid, s.values.mean(axis=0))


def modal_curve(model: FpcaModel, densities: list[ScoreDensityEstimator], T: int) -> Curve:
    """Modal curve: mean + sum_{j<=T} theta_j^(1/2) m_j psi_j.

    m_j is the mode of the j-th fitted score density. Reproducible: the same
    model, densities and T give the identical curve.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if T > len(densities) or T > model.n_components:
        raise ValueError("T exceeds the fitted components")
    modes = np.array([densities[j].mode() for j in range(T)])
    theta = model.eigenvalues[:T]
    values = model.mean.values + (np.sqrt(theta) * modes) @ model.eigenfunctions[:T]
    return Curve(model.grid, values)


class _ProductKde:
    # T-variate product-gaussian KDE on score columns
    def __init__(self, scores: np.ndarray, bandwidths: np.ndarray):
        self.scores = scores
        self.bw = bandwidths
        self.norm = scores.shape[0] * float(np.prod(bandwidths * math.sqrt(2.0 * math.pi)))

    def density(self, u: np.ndarray) -> float:
        z = (self.scores - u) / self.bw
        return float(np.exp(-0.5 * (z * z).sum(axis=1)).sum() / self.norm)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        z = (self.scores - u) / self.bw
        k = np.exp(-0.5 * (z * z).sum(axis=1))
        return (k[:, None] * (self.scores - u) / self.bw**2).sum(axis=0) / self.norm


def multivariate_modal_curve(model: FpcaModel, T: int) -> Curve:
    """Comparison estimator: joint mode of a T-variate product-gaussian KDE.

    Per-dimension normal-reference bandwidths; the joint mode is found by a
    single gradient ascent with backtracking started from the sample point of
    highest estimated density. T is capped at 4: joint density estimation
    deteriorates quickly with dimension, and this estimator exists to exhibit
    exactly that.
    """
    if not 1 <= T <= 4:
        raise ValueError("T must be between 1 and 4")
    if model.scores is None:
        raise ValueError("model carries no training scores")
    if T > model.n_components:
        raise ValueError("T exceeds the fitted components")
    scores = model.scores[:, :T]
    if np.any(np.isnan(scores)):
        raise ValueError("a requested component has no scores (null eigenvalue)")
    n = scores.shape[0]
    if n == 1:
        joint_mode = scores[0].copy()
    else:
        bw = np.array([bandwidth_normal_reference(scores[:, d]) for d in range(T)])
        kde = _ProductKde(scores, bw)
        dens_at_samples = np.array([kde.density(scores[i]) for i in range(n)])
        x = scores[int(np.argmax(dens_at_samples))].astype(float)
        fx = kde.density(x)
        base_step = float(np.min(bw)) ** 2
        for _ in range(500):
            g = kde.gradient(x)
            t = base_step
            moved = False
            while t > 1e-14:
                cand = x + t * g
                fc = kde.density(cand)
                if fc > fx:
                    x, fx, moved = cand, fc, True
                    break
                t *= 0.5
            if not moved or float(np.linalg.norm(t * g)) < 1e-10:
                break
        joint_mode = x
    theta = model.eigenvalues[:T]
    values = model.mean.values + (np.sqrt(theta) * joint_mode) @ model.eigenfunctions[:T]
    return Curve(model.grid, values)


@dataclass(frozen=True)
class MedianResult:
    """Spatial-median curve with Weiszfeld convergence metadata."""

    curve: Curve
    iterations: int
    final_step: float
    converged: bool
    objective_path: np.ndarray  # sum of L2 distances after each iterate


def median_curve(s: FunctionalSample, tol: float = 1e-6, max_iter: int = 200) -> MedianResult:
    """Spatial-median curve by Weiszfeld iteration from the mean curve.

    Iterates x <- (sum_i X_i / d_i) / (sum_i 1 / d_i) with distances floored
    at 1e-10 (the standard fix when an iterate lands on a datum). Stops when
    the L2 step drops below tol; hitting max_iter sets converged=False
    rather than raising.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = s.grid.weights
    x = s.values.mean(axis=0)

    def distances(y):
        d2 = ((s.values - y) ** 2 * w).sum(axis=1)
        return np.maximum(np.sqrt(d2), 1e-10)

    objective = []
    converged = False
    step = float("inf")
    it = 0
    for it in range(1, max_iter + 1):
        d = distances(x)
        new = (s.values / d[:, None]).sum(axis=0) / (1.0 / d).sum()
        step = float(np.sqrt((w * (new - x) ** 2).sum()))
        x = new
        objective.append(float(distances(x).sum()))
        if step < tol:
            converged = True
            break
    return MedianResult(
        curve=Curve(s.grid, x),
        iterations=it,
        final_step=step,
        converged=converged,
        objective_path=np.asarray(objective),
    )


@dataclass(frozen=True)
class CentralCurveSet:
    """Mean, modal and spatial-median curves of one sample."""

    mean: Curve
    mode: Curve
    median: Curve
    T: int
    median_iterations: int
    median_final_step: float


def central_curves(
    s: FunctionalSample,
    model: FpcaModel,
    densities: list[ScoreDensityEstimator],
    T: int,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> CentralCurveSet:
    med = median_curve(s, tol=tol, max_iter=max_iter)
    return CentralCurveSet(
        mean=mean_curve(s),
        mode=modal_curve(model, densities, T),
        median=med.curve,
        T=T,
        median_iterations=med.iterations,
        median_final_step=med.final_step,
    )
