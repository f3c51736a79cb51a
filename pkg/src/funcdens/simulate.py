"""Generative models for the simulation study, ground-truth bookkeeping,
pointwise MSE, and the mode-estimation study harness.

Each model draws X_j = c T V_j with one uniform U[1,2] mixer T per curve
(shared across components), i.i.d. V_j, and c = var(T V)^(-1/2), then forms
X(t) = sum_j theta_j^(1/2) X_j psi_j(t) with psi_j(t) = sqrt(2) cos(pi j t)
on a uniform grid over [0,1]. The scores are uncorrelated across components
but dependent through T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, stats

from .central import modal_curve, multivariate_modal_curve
from .fpca import fit_fpca
from .grids import Curve, FunctionalSample, Grid
from .kde import fit_score_density

__all__ = [
    "SimScenario",
    "GroundTruth",
    "generate_sample",
    "true_score_mode",
    "true_modal_curve",
    "mse_curve",
    "MseResult",
    "run_mode_study",
    "StudyRow",
]

# model id -> (V distribution, eigenvalue exponent a in theta_j = j^-a)
MODEL_SPECS = {
    "i": ("chi2", 3.0),
    "ii": ("chi2", 2.0),
    "iii": ("gaussian", 3.0),
    "iv": ("gaussian", 2.0),
}

# c = var(T V)^(-1/2) with E T^2 = 7/3 for T ~ U[1,2]:
#   gaussian V: var(TV) = 7/3, chi2(8)-8: var V = 16 so var(TV) = 112/3.
_C_GAUSS = math.sqrt(3.0 / 7.0)
_C_CHI2 = math.sqrt(3.0 / 112.0)


@dataclass(frozen=True)
class SimScenario:
    """Generative scenario: model id, sample size, grid size, KL components."""

    model_id: str
    n: int
    m: int = 201
    n_components: int = 10
    seed: object = 0

    def __post_init__(self):
        if self.model_id not in MODEL_SPECS:
            raise ValueError(f"unknown model {self.model_id!r}; use one of {sorted(MODEL_SPECS)}")
        if self.n < 1 or self.m < 2 or self.n_components < 1:
            raise ValueError("n >= 1, m >= 2 and n_components >= 1 required")

    def with_(self, **kw) -> "SimScenario":
        return replace(self, **kw)


@dataclass(frozen=True)
class GroundTruth:
    """Generator-side truth for oracle tests."""

    eigenvalues: np.ndarray  # (J,)
    eigenfunctions: np.ndarray  # (J, m), rows sqrt(2) cos(pi j t)
    scores: np.ndarray  # (n, J) true standardized scores X_j
    mixers: np.ndarray  # (n,) the shared T draws
    c: float


def _basis(grid: Grid, J: int) -> np.ndarray:
    j = np.arange(1, J + 1)[:, None]
    return np.sqrt(2.0) * np.cos(np.pi * j * grid.points[None, :])


def generate_sample(sc: SimScenario) -> tuple[FunctionalSample, GroundTruth]:
    """Draw a sample and return it with its generating truth.

    Deterministic given the scenario seed; the per-curve mixer T is drawn
    first, then the (n, J) block of V.
    """
    law, a = MODEL_SPECS[sc.model_id]
    J = sc.n_components
    theta = np.arange(1, J + 1, dtype=float) ** -a
    grid = Grid.uniform(0.0, 1.0, sc.m)
    psi = _basis(grid, J)
    rng = np.random.default_rng(sc.seed)
    t = rng.uniform(1.0, 2.0, sc.n)
    if law == "gaussian":
        v = rng.standard_normal((sc.n, J))
        c = _C_GAUSS
    else:
        v = rng.chisquare(8.0, (sc.n, J)) - 8.0
        c = _C_CHI2
    scores = c * t[:, None] * v
    values = (np.sqrt(theta) * scores) @ psi
    truth = GroundTruth(eigenvalues=theta, eigenfunctions=psi, scores=scores, mixers=t, c=c)
    return FunctionalSample(grid, values), truth


@lru_cache(maxsize=None)
def true_score_mode(model_id: str) -> float:
    """Mode of the standardized score law c T V of a model.

    Gaussian-score models are symmetric with mode 0. For the chi-square
    models the mixture density f(y) = int_1^2 f_V(y/(ct)) / (ct) dt has no
    closed form; it is evaluated by quadrature on a fine grid and the argmax
    refined by golden-section search. Computed once per process.
    """
    law, _ = MODEL_SPECS[model_id]
    if law == "gaussian":
        return 0.0
    c = _C_CHI2

    def density(y: float) -> float:
        val, _ = integrate.quad(
            lambda t: stats.chi2.pdf(y / (c * t) + 8.0, df=8) / (c * t), 1.0, 2.0,
            epsabs=1e-12, epsrel=1e-12,
        )
        return val

    ys = np.linspace(-1.0, 0.5, 601)
    vals = np.array([density(y) for y in ys])
    k = int(np.argmax(vals))
    a, b = ys[k - 1], ys[k + 1]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    while b - a > 1e-10:
        lo, hi = b - gr * (b - a), a + gr * (b - a)
        if density(lo) >= density(hi):
            b = hi
        else:
            a = lo
    return 0.5 * (a + b)


def true_modal_curve(model_id: str, grid: Grid, n_components: int = 10) -> Curve:
    """Population modal curve sum_j theta_j^(1/2) m psi_j on a grid."""
    _, a = MODEL_SPECS[model_id]
    theta = np.arange(1, n_components + 1, dtype=float) ** -a
    psi = _basis(grid, n_components)
    m = true_score_mode(model_id)
    return Curve(grid, (np.sqrt(theta) * m) @ psi)


@dataclass(frozen=True)
class MseResult:
    """Pointwise MSE curve and its quadrature integral."""

    curve: Curve
    integrated: float


def mse_curve(estimates: list[Curve], truth: Curve) -> MseResult:
    """Pointwise mean squared deviation of estimates from a truth curve."""
    if not estimates:
        raise ValueError("need at least one estimate")
    grid = truth.grid
    for e in estimates:
        if e.grid is not grid and e.grid != grid:
            raise ValueError("all curves must share one grid")
    dev = np.vstack([e.values for e in estimates]) - truth.values
    mse = (dev * dev).mean(axis=0)
    return MseResult(curve=Curve(grid, mse), integrated=float(np.sum(grid.weights * mse)))


@dataclass(frozen=True)
class StudyRow:
    model_id: str
    estimator: str  # 'univariate' or 'multivariate'
    T: int
    imse: float


def run_mode_study(
    model_ids,
    B: int,
    n: int,
    T_list,
    estimators=("univariate", "multivariate"),
    seed=0,
    m: int = 201,
    kernel: str = "gaussian",
) -> list[StudyRow]:
    """Replicated integrated-MSE comparison of the two modal estimators.

    For every replication: generate a sample, fit the full score pipeline,
    build the modal curve (per-component score modes) and the multivariate
    comparison curve for each truncation T, and accumulate squared error
    against the population modal curve. Replication b of model k draws from
    the substream [seed, k, b]; results do not depend on evaluation order.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    T_list = sorted(set(int(t) for t in T_list))
    if any(t < 1 for t in T_list):
        raise ValueError("truncations must be >= 1")
    for est in estimators:
        if est not in ("univariate", "multivariate"):
            raise ValueError(f"unknown estimator {est!r}")

    rows = []
    for k, model_id in enumerate(model_ids):
        grid = Grid.uniform(0.0, 1.0, m)
        truth = true_modal_curve(model_id, grid)
        acc = {(est, T): np.zeros(m) for est in estimators for T in T_list}
        for b in range(B):
            sc = SimScenario(model_id=model_id, n=n, m=m, seed=[seed, k, b])
            sample, _ = generate_sample(sc)
            model = fit_fpca(sample, J=min(10, n))
            densities = [
                fit_score_density(model.scores[:, j], kernel=kernel)
                for j in range(max(T_list))
            ]
            for T in T_list:
                if "univariate" in estimators:
                    est_curve = modal_curve(model, densities, T)
                    acc[("univariate", T)] += (est_curve.values - truth.values) ** 2
                if "multivariate" in estimators:
                    est_curve = multivariate_modal_curve(model, T)
                    acc[("multivariate", T)] += (est_curve.values - truth.values) ** 2
        for est in estimators:
            for T in T_list:
                imse = float(np.sum(grid.weights * acc[(est, T)] / B))
                rows.append(StudyRow(model_id=model_id, estimator=est, T=T, imse=imse))
    return rows
