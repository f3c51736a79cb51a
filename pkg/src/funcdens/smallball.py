"""Monte Carlo small-ball probabilities and their closed-form approximations:
the tail-corrected approximation q(h), eigenvalue-decay classification,
effective-dimension rules, and leading-order (Stirling) forms.

All probability products are computed in log space. Monte Carlo loops are
chunked with one RNG substream per fixed-size chunk, derived from the master
seed as default_rng([seed, chunk_index]); results are therefore independent
of the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln

__all__ = [
    "ScoreLaw",
    "EigenDecaySpec",
    "ProcessSpec",
    "ProbabilityEstimate",
    "SmallBallReport",
    "unit_ball_volume",
    "small_ball_mc",
    "tail_distribution_mc",
    "q_approx",
    "classify_decay",
    "effective_dimension",
    "asymptotic_approx",
    "AsymptoticApprox",
    "validate_approximation",
]

MC_CHUNK = 1 << 17  # fixed chunk size; part of the determinism contract
_Z95 = 1.959963984540054


class ScoreLaw:
    """Per-component score distribution: mean 0, variance 1.

    Wraps a frozen scipy distribution; the variance is checked at
    construction (moment query, 2% tolerance).
    """

    def __init__(self, dist, name: str):
        var = float(dist.var())
        if not math.isfinite(var) or abs(var - 1.0) > 0.02:
            raise ValueError(f"score law must have unit variance, got {var}")
        if abs(float(dist.mean())) > 0.02:
            raise ValueError("score law must have mean zero")
        self.dist = dist
        self.name = name

    @classmethod
    def gaussian(cls) -> "ScoreLaw":
        return cls(stats.norm(), "gaussian")

    @classmethod
    def standardized_chi2(cls, df: int = 8) -> "ScoreLaw":
        # (chi2(df) - df) / sqrt(2 df): mean 0, variance 1
        s = math.sqrt(2.0 * df)
        return cls(stats.chi2(df, loc=-df / s, scale=1.0 / s), f"chi2_{df}")

    def pdf(self, x):
        return self.dist.pdf(x)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.dist.rvs(size=size, random_state=rng)


@dataclass(frozen=True)
class EigenDecaySpec:
    """Truncated positive non-increasing eigenvalue sequence.

    kind is one of 'power' (j^-a, a > 1), 'geometric' (rho^j), 'gaussian_like'
    (exp(-c j^2)) or 'explicit'. Closed-form kinds know their analytic tail
    mass beyond any index; explicit lists have none beyond the truncation.
    """

    kind: str
    values: np.ndarray
    param: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("eigenvalue sequence must be a nonempty 1-d array")
        if np.any(v <= 0):
            raise ValueError("eigenvalues must be positive")
        if np.any(np.diff(v) > 0):
            raise ValueError("eigenvalues must be non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def power(cls, a: float, j_max: int = 200) -> "EigenDecaySpec":
        if a <= 1:
            raise ValueError("power decay needs a > 1 for a summable sequence")
        j = np.arange(1, j_max + 1, dtype=float)
        return cls("power", j**-a, a)

    @classmethod
    def geometric(cls, rho: float, j_max: int = 200) -> "EigenDecaySpec":
        if not 0 < rho < 1:
            raise ValueError("geometric decay needs 0 < rho < 1")
        j = np.arange(1, j_max + 1, dtype=float)
        return cls("geometric", rho**j, rho)

    @classmethod
    def gaussian_like(cls, c: float, j_max: int = 200) -> "EigenDecaySpec":
        if c <= 0:
            raise ValueError("gaussian-like decay needs c > 0")
        j = np.arange(1, j_max + 1, dtype=float)
        return cls("gaussian_like", np.exp(-c * j * j), c)

    @classmethod
    def explicit(cls, values) -> "EigenDecaySpec":
        return cls("explicit", np.asarray(values, dtype=float))

    @property
    def j_max(self) -> int:
        return self.values.size

    def tail_sum_beyond(self, k: int) -> float:
        """sum_{j > k} theta_j: stored part plus the analytic remainder."""
        if k < 0:
            raise ValueError("k must be >= 0")
        stored = float(self.values[k:].sum()) if k < self.j_max else 0.0
        return stored + self._remainder_beyond(max(k, self.j_max))

    def _remainder_beyond(self, k: int) -> float:
        # upper bound on sum_{j > k} for closed-form kinds
        if self.kind == "power":
            a = self.param
            return k ** (1.0 - a) / (a - 1.0)
        if self.kind == "geometric":
            rho = self.param
            return rho ** (k + 1) / (1.0 - rho)
        if self.kind == "gaussian_like":
            c = self.param
            ratio = math.exp(-c * (2 * k + 3))
            return math.exp(-c * (k + 1) ** 2) / (1.0 - ratio)
        return 0.0


@dataclass(frozen=True)
class ProcessSpec:
    """Eigenvalue decay, score law, and the fixed center function's scores.

    center_scores holds the first few scores of the center; components beyond
    its length are centered at 0.
    """

    decay: EigenDecaySpec
    score_law: ScoreLaw
    center_scores: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = np.asarray(self.center_scores, dtype=float)
        if c.ndim != 1:
            raise ValueError("center_scores must be 1-d")
        c.setflags(write=False)
        object.__setattr__(self, "center_scores", c)

    def centers(self, upto: int | None = None) -> np.ndarray:
        j = self.decay.j_max if upto is None else upto
        out = np.zeros(j)
        k = min(j, self.center_scores.size)
        out[:k] = self.center_scores[:k]
        return out


def unit_ball_volume(r: int) -> float:
    """Volume pi^(r/2) / Gamma(r/2 + 1) of the r-dimensional unit ball."""
    if r < 0:
        raise ValueError("dimension must be >= 0")
    return float(math.exp(0.5 * r * math.log(math.pi) - gammaln(0.5 * r + 1.0)))


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Monte Carlo probability with a Wilson 95% interval."""

    p: float
    ci_low: float
    ci_high: float
    hits: int
    n_draws: int
    zero_hits: bool


def _wilson_interval(hits: int, n: int) -> tuple[float, float]:
    p = hits / n
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = (_Z95 / denom) * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def _chunk_sizes(n_mc: int) -> list[int]:
    full, rem = divmod(n_mc, MC_CHUNK)
    return [MC_CHUNK] * full + ([rem] if rem else [])


def small_ball_mc(
    spec: ProcessSpec, radius: float, n_mc: int, seed, n_jobs: int = 1
) -> ProbabilityEstimate:
    """P(sum_j theta_j (X_j - x_j)^2 <= radius^2) by Monte Carlo.

    Deterministic given the seed: chunk c draws from
    default_rng([seed, c]) regardless of n_jobs.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    theta = spec.decay.values
    centers = spec.centers()
    h2 = radius * radius

    def run_chunk(args) -> int:
        c, size = args
        rng = np.random.default_rng([*np.atleast_1d(seed), c])
        w = spec.score_law.sample(rng, (size, theta.size)) - centers
        s = (theta * w * w).sum(axis=1)
        return int((s <= h2).sum())

    jobs = list(enumerate(_chunk_sizes(n_mc)))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            hits = sum(ex.map(run_chunk, jobs))
    else:
        hits = sum(map(run_chunk, jobs))
    lo, hi = _wilson_interval(hits, n_mc)
    return ProbabilityEstimate(
        p=hits / n_mc, ci_low=lo, ci_high=hi, hits=hits, n_draws=n_mc, zero_hits=hits == 0
    )


def tail_distribution_mc(
    spec: ProcessSpec, radius: float, r: int, n_mc: int, seed, n_jobs: int = 1
) -> np.ndarray:
    """Sample of S = radius^-2 sum_{j > r} theta_j (X_j - x_j)^2.

    Returns the full empirical sample for downstream integration. The draws
    do not depend on the radius, which only rescales them.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if r >= spec.decay.j_max:
        raise ValueError("r >= J_max leaves an empty tail")
    if r < 0:
        raise ValueError("r must be >= 0")
    theta = spec.decay.values[r:]
    centers = spec.centers()[r:]

    def run_chunk(args) -> np.ndarray:
        c, size = args
        rng = np.random.default_rng([*np.atleast_1d(seed), c])
        w = spec.score_law.sample(rng, (size, theta.size)) - centers
        return (theta * w * w).sum(axis=1)

    jobs = list(enumerate(_chunk_sizes(n_mc)))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(run_chunk, jobs))
    else:
        parts = list(map(run_chunk, jobs))
    return np.concatenate(parts) / (radius * radius)


def _log_leading_term(radius: float, r: int, theta: np.ndarray, densities_at_center: np.ndarray) -> float:
    return (
        r * (math.log(radius) + 0.5 * math.log(math.pi))
        - float(gammaln(0.5 * r + 1.0))
        + float(np.sum(-0.5 * np.log(theta[:r]) + np.log(densities_at_center[:r])))
    )


def q_approx(
    spec: ProcessSpec,
    radius: float,
    r: int,
    densities_at_center: np.ndarray,
    tail_sample: np.ndarray,
) -> float:
    """Tail-corrected small-ball approximation.

    (radius sqrt(pi))^r / Gamma(r/2+1) * prod_j theta_j^(-1/2) f_j(x_j)
    times the tail integral int_0^1 (1-t)^(r/2) dG(t), the latter estimated
    as the Monte Carlo average of (1-S)^(r/2) on S <= 1.
    """
    densities_at_center = np.asarray(densities_at_center, dtype=float)
    tail_sample = np.asarray(tail_sample, dtype=float)
    if densities_at_center.size < r:
        raise ValueError("need a density value for each of the first r components")
    if np.any(densities_at_center[:r] <= 0):
        raise ValueError("densities at the center must be positive")
    if tail_sample.size == 0:
        raise ValueError("tail sample is empty")
    inside = tail_sample <= 1.0
    g_integral = float(np.mean(np.where(inside, (1.0 - np.clip(tail_sample, None, 1.0)) ** (0.5 * r), 0.0)))
    if g_integral == 0.0:
        return 0.0
    log_q = _log_leading_term(radius, r, spec.decay.values, densities_at_center) + math.log(g_integral)
    return float(math.exp(log_q))


@dataclass(frozen=True)
class AsymptoticApprox:
    """Leading-order approximation in two algebraically equal forms.

    log_value is exact (log-gamma); log_stirling replaces the gamma term by
    its Stirling expansion r/2 (log(2 pi e h^2) - log r) - log(pi r)/2, so the
    two agree within 1/(6r) + O(1/r^2).
    """

    value: float
    log_value: float
    log_stirling: float


def asymptotic_approx(
    spec: ProcessSpec, radius: float, r: int, densities_at_center: np.ndarray
) -> AsymptoticApprox:
    """Leading-order form: q_approx with the tail integral replaced by 1."""
    densities_at_center = np.asarray(densities_at_center, dtype=float)
    if densities_at_center.size < r:
        raise ValueError("need a density value for each of the first r components")
    if np.any(densities_at_center[:r] <= 0):
        raise ValueError("densities at the center must be positive")
    theta = spec.decay.values
    log_value = _log_leading_term(radius, r, theta, densities_at_center)
    sum_terms = float(np.sum(-0.5 * np.log(theta[:r]) + np.log(densities_at_center[:r])))
    log_stirling = (
        0.5 * r * (math.log(2.0 * math.pi * math.e * radius * radius) - math.log(r))
        - 0.5 * math.log(math.pi * r)
        + sum_terms
    )
    return AsymptoticApprox(value=float(math.exp(log_value)), log_value=log_value, log_stirling=log_stirling)


def classify_decay(decay: EigenDecaySpec, k_probe: int) -> str:
    """Classify the decay as 'superexponential', 'exponential' or 'neither'.

    Probes the ratio theta_{k+1}/theta_k and the tail ratio
    theta_k^-1 sum_{j>k} theta_j for k = 1..k_probe: superexponential when
    the ratios decrease monotonically below 0.05 at k_probe; exponential when
    the tail ratios over the last third of probes stay within +/-10% of their
    mean; otherwise neither.
    """
    if k_probe < 3:
        raise ValueError("k_probe must be >= 3")
    if k_probe >= decay.j_max:
        raise ValueError("k_probe must be < J_max")
    theta = decay.values
    ratios = theta[1 : k_probe + 1] / theta[:k_probe]
    if np.all(np.diff(ratios) <= 1e-12) and ratios[-1] < 0.05:
        return "superexponential"
    tails = np.array([decay.tail_sum_beyond(k) / theta[k - 1] for k in range(1, k_probe + 1)])
    last = tails[(2 * k_probe) // 3 :]
    mid = float(last.mean())
    if mid > 0 and np.all(np.abs(last - mid) <= 0.10 * mid):
        return "exponential"
    return "neither"


def effective_dimension(
    decay: EigenDecaySpec,
    radius: float,
    regime: str,
    lam: float = 3.0,
    c_seq=None,
) -> int:
    """Dimension r matched to the radius, by regime.

    exponential: the largest j with theta_j^-1 h^2 <= lam^2. superexponential:
    the smallest s with |log(h^2/theta_s)| <= c_s (c_s defaults to ln(1+s)),
    else the r with theta_{r+1} < h^2 < theta_r (r=1 when h^2 >= theta_1,
    r=J_max when h^2 <= theta_{J_max}).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    theta = decay.values
    h2 = radius * radius
    if h2 > lam * lam * theta[0]:
        raise ValueError("radius too large for dimension-1 resolution")
    if regime == "exponential":
        ok = h2 / theta <= lam * lam
        return int(np.nonzero(ok)[0].max()) + 1
    if regime == "superexponential":
        if c_seq is None:
            c_seq = lambda s: math.log(1.0 + s)
        for s in range(1, decay.j_max + 1):
            if abs(math.log(h2 / theta[s - 1])) <= c_seq(s):
                return s
        if h2 >= theta[0]:
            return 1
        if h2 <= theta[-1]:
            return decay.j_max
        return int(np.argmax(theta < h2))  # first j with theta_j < h2, i.e. r
    raise ValueError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class SmallBallReport:
    """One radius of the Monte Carlo vs approximation comparison."""

    radius: float
    r: int
    regime: str
    p_mc: ProbabilityEstimate
    q_hat: float
    asymptotic_q: float
    log_ratio: float
    per_dim_error: float
    reliable: bool  # False when the MC hit count is below 200


def validate_approximation(
    spec: ProcessSpec,
    radius_list,
    lam: float = 3.0,
    n_mc: int = 200_000,
    seed=0,
    tail_n_mc: int = 100_000,
    k_probe: int | None = None,
) -> list[SmallBallReport]:
    """Compare Monte Carlo small-ball probabilities with q(h) per radius.

    Radii must be positive and decreasing. The regime is classified from the
    eigenvalue decay; 'neither' is rejected (slower-than-exponential decay is
    outside the approximation's intended range).
    """
    radii = [float(h) for h in radius_list]
    if any(h <= 0 for h in radii):
        raise ValueError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be decreasing")
    if not radii:
        return []
    if k_probe is None:
        k_probe = min(spec.decay.j_max - 1, 40)
    regime = classify_decay(spec.decay, k_probe)
    if regime == "neither":
        raise ValueError("eigenvalue decay is neither superexponential nor exponential")

    tail_mass = spec.decay.tail_sum_beyond(spec.decay.j_max)
    if tail_mass >= 1e-9 * min(radii) ** 2:
        warnings.warn(
            "analytic eigenvalue mass beyond the truncation is not negligible "
            f"({tail_mass:.3g} vs 1e-9 h_min^2); increase j_max",
            stacklevel=2,
        )

    reports = []
    for i, h in enumerate(radii):
        r = effective_dimension(spec.decay, h, regime, lam=lam)
        est = small_ball_mc(spec, h, n_mc, [*np.atleast_1d(seed), 10 + i])
        tail = tail_distribution_mc(spec, h, r, tail_n_mc, [*np.atleast_1d(seed), 1000 + i])
        f_at = np.asarray(spec.score_law.pdf(spec.centers(r)), dtype=float)
        q = q_approx(spec, h, r, f_at, tail)
        asym = asymptotic_approx(spec, h, r, f_at)
        log_ratio = math.log(est.p / q) if est.p > 0 and q > 0 else float("-inf")
        reports.append(
            SmallBallReport(
                radius=h,
                r=r,
                regime=regime,
                p_mc=est,
                q_hat=q,
                asymptotic_q=asym.value,
                log_ratio=log_ratio,
                per_dim_error=abs(log_ratio) / r,
                reliable=est.hits >= 200,
            )
        )
    return reports
