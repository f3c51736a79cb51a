"""funcdens: surrogate density, score densities, modal curves and small-ball
probabilities for samples of curves on a shared grid.
"""

from .central import (
    CentralCurveSet,
    MedianResult,
    central_curves,
    mean_curve,
    median_curve,
    modal_curve,
    multivariate_modal_curve,
)
from .fpca import (
    FpcaModel,
    decompose,
    estimate_covariance,
    fit_fpca,
    project_scores,
    variance_explained,
)
from .grids import Curve, FunctionalSample, Grid, center_sample, inner_product, l2_distance
from .kde import (
    GapRow,
    ScoreDensityEstimator,
    bandwidth_normal_reference,
    equivalence_gap,
    find_mode,
    fit_score_density,
    ideal_kde_evaluate,
)
from .logdensity import (
    LogDensityValue,
    ProductGrid,
    RankResult,
    density_product_grid,
    log_density,
    log_density_from_scores,
    rank_by_density,
)
from .simulate import (
    GroundTruth,
    MseResult,
    SimScenario,
    StudyRow,
    generate_sample,
    mse_curve,
    run_mode_study,
    true_modal_curve,
    true_score_mode,
)
from .smallball import (
    AsymptoticApprox,
    EigenDecaySpec,
    ProbabilityEstimate,
    ProcessSpec,
    ScoreLaw,
    SmallBallReport,
    asymptotic_approx,
    classify_decay,
    effective_dimension,
    q_approx,
    small_ball_mc,
    tail_distribution_mc,
    unit_ball_volume,
    validate_approximation,
)

__version__ = "0.1.0"
