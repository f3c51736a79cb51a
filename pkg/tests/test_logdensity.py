import math

import numpy as np
import pytest

from funcdens import (
    Curve,
    ScoreDensityEstimator,
    SimScenario,
    density_product_grid,
    fit_fpca,
    fit_score_density,
    generate_sample,
    log_density,
    log_density_from_scores,
    rank_by_density,
)
from funcdens.fpca import FpcaModel
from funcdens.grids import Grid
from funcdens.logdensity import DENSITY_FLOOR


def make_score_model(scores: np.ndarray) -> FpcaModel:
    # minimal model wrapper for operations that only touch .scores
    n, J = scores.shape
    g = Grid.uniform(0.0, 1.0, J + 1)
    return FpcaModel(
        grid=g,
        mean=Curve(g, np.zeros(J + 1)),
        eigenvalues=np.linspace(2.0, 1.0, J),
        eigenfunctions=np.eye(J, J + 1),
        scores=scores,
    )


def test_single_component_is_that_log_density(model_iii_200):
    sample, _, model, densities = model_iii_200
    x = sample.curve(0)
    ld = log_density(model, densities, x, 1)
    f1 = densities[0].evaluate(model.scores[0, 0])
    assert ld.value == ld.contributions[0]  # single-term mean adds nothing
    assert ld.value == pytest.approx(math.log(f1), rel=1e-14)
    assert ld.product == pytest.approx(f1, rel=1e-12)


def test_constant_contributions_mean():
    # every component contributes phi(0): value is -log(2 pi)/2
    est = ScoreDensityEstimator(samples=np.array([0.0]), kernel="gaussian", bandwidth=1.0)
    ld = log_density_from_scores([est, est, est], np.zeros(3), 3)
    assert ld.value == pytest.approx(-0.5 * math.log(2.0 * math.pi), rel=1e-12)
    assert ld.value == pytest.approx(-0.91894, abs=1e-5)


def test_far_point_gaussian_finite(model_iii_200):
    _, _, model, densities = model_iii_200
    # moderately far: density small but above the floor, nothing flagged
    far = Curve(model.grid, model.mean.values + 4.5 * model.eigenfunctions[0])
    ld = log_density(model, densities, far, 3)
    assert np.isfinite(ld.value)
    assert not ld.floored.any()
    assert ld.value < -3
    # extremely far: gaussian stays positive in exact arithmetic, but values
    # below the floor are clamped at log(1e-12), keeping everything finite
    very_far = Curve(model.grid, model.mean.values + 50.0 * model.eigenfunctions[0])
    ld2 = log_density(model, densities, very_far, 3)
    assert np.isfinite(ld2.value)
    assert ld2.floored[0]  # only the displaced component underflows
    assert ld2.contributions[0] == pytest.approx(math.log(DENSITY_FLOOR))
    assert ld2.value < ld.value


def test_compact_kernel_hits_floor():
    est = fit_score_density(np.zeros(5) + np.arange(5) * 0.1, kernel="epanechnikov")
    ld = log_density_from_scores([est], np.array([99.0]), 1)
    assert ld.floored[0]
    assert ld.value == pytest.approx(math.log(DENSITY_FLOOR))


def test_permutation_invariance_bit_identical(rng):
    ests = [fit_score_density(rng.standard_normal(60)) for _ in range(6)]
    scores = rng.standard_normal(6)
    base = log_density_from_scores(ests, scores, 6).value
    for _ in range(20):
        perm = rng.permutation(6)
        permuted = log_density_from_scores([ests[k] for k in perm], scores[perm], 6).value
        assert permuted == base  # bit identical under sorted summation


def test_value_is_mean_of_single_component_values(model_iii_200):
    sample, _, model, densities = model_iii_200
    x = sample.curve(5)
    r = 4
    ld = log_density(model, densities, x, r)
    singles = np.array(
        [log_density_from_scores([densities[j]], model.scores[5, j : j + 1], 1).value for j in range(r)]
    )
    assert ld.value == np.sort(singles).sum() / r
    assert np.allclose(np.sort(ld.contributions), np.sort(singles))


def test_monotone_surrogacy(model_iii_200):
    # ranking by mean-log equals ranking by the exponentiated product
    _, _, model, densities = model_iii_200
    vals = []
    prods = []
    for i in range(model.scores.shape[0]):
        ld = log_density_from_scores(densities, model.scores[i], 3)
        vals.append(ld.value)
        prods.append(ld.product)
    assert np.array_equal(np.argsort(vals), np.argsort(prods))


def test_log_density_errors(model_iii_200):
    sample, _, model, densities = model_iii_200
    with pytest.raises(ValueError):
        log_density(model, densities, sample.curve(0), 0)
    with pytest.raises(ValueError):
        log_density(model, densities, sample.curve(0), 11)


# ----------------------------------------------------------- product grid


def test_product_grid_single_point(model_iii_200):
    _, _, model, densities = model_iii_200
    pg = density_product_grid(model, densities, (1, 2), (0.0, 0.0, 1), (0.0, 0.0, 1))
    want = densities[0].evaluate(0.0) * densities[1].evaluate(0.0)
    assert pg.surface.shape == (1, 1)
    assert pg.surface[0, 0] == pytest.approx(want, rel=1e-12)


def test_product_grid_is_outer_product(model_iii_200):
    _, _, model, densities = model_iii_200
    pg = density_product_grid(model, densities, (1, 2), (-2, 2, 17), (-1, 3, 9))
    fu = np.atleast_1d(densities[0].evaluate(pg.u))
    fv = np.atleast_1d(densities[1].evaluate(pg.v))
    assert np.max(np.abs(pg.surface - np.outer(fu, fv))) < 1e-12
    assert pg.point_values.shape == (model.scores.shape[0],)


def test_product_grid_mode_near_origin():
    rng = np.random.default_rng(77)
    scores = rng.standard_normal((5000, 2))
    model = make_score_model(scores)
    densities = [fit_score_density(scores[:, j]) for j in range(2)]
    pg = density_product_grid(model, densities, (1, 2), (-1, 1, 81), (-1, 1, 81))
    i, j = np.unravel_index(np.argmax(pg.surface), pg.surface.shape)
    assert abs(pg.u[i]) < 0.15
    assert abs(pg.v[j]) < 0.15


def test_product_grid_rejects_empty_spec(model_iii_200):
    _, _, model, densities = model_iii_200
    with pytest.raises(ValueError):
        density_product_grid(model, densities, (1, 2), (0, 1, 0), (0, 1, 5))


# ---------------------------------------------------------------- ranking


def test_rank_single_group(model_iii_200):
    _, _, model, densities = model_iii_200
    res = rank_by_density(model, densities, 2, 1)
    assert np.all(res.groups == 0)


def test_rank_identical_curves_fall_back_to_index_order():
    scores = np.zeros((6, 2))
    model = make_score_model(scores)
    densities = [fit_score_density(np.array([-1.0, 0.0, 1.0])) for _ in range(2)]
    res = rank_by_density(model, densities, 2, 3)
    assert np.array_equal(res.order, np.arange(6))
    assert np.array_equal(res.groups, np.array([0, 0, 1, 1, 2, 2]))


def test_rank_group_sizes_and_order(model_iii_200):
    _, _, model, densities = model_iii_200
    res = rank_by_density(model, densities, 2, 7)
    sizes = np.bincount(res.groups, minlength=7)
    assert sizes.max() - sizes.min() <= 1
    assert sizes.sum() == 200
    # group 0 holds the lowest densities
    assert res.values[res.groups == 0].max() <= res.values[res.groups == 6].min()


def test_rank_errors(model_iii_200):
    _, _, model, densities = model_iii_200
    with pytest.raises(ValueError):
        rank_by_density(model, densities, 2, 201)
    with pytest.raises(ValueError):
        rank_by_density(model, densities, 2, 0)


def test_rank_stability_across_resolution():
    # coarse (r=2) and fine (r=10) rankings stay positively associated
    from scipy.stats import spearmanr

    sample, _ = generate_sample(SimScenario("iii", n=200, seed=[173]))
    model = fit_fpca(sample, J=10)
    densities = [fit_score_density(model.scores[:, j]) for j in range(10)]
    r2 = rank_by_density(model, densities, 2, 4)
    r10 = rank_by_density(model, densities, 10, 4)
    rho = spearmanr(r2.values, r10.values).statistic
    assert rho > 0.5
