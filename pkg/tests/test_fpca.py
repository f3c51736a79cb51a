import numpy as np
import pytest

from funcdens import (
    Curve,
    FunctionalSample,
    Grid,
    SimScenario,
    decompose,
    estimate_covariance,
    fit_fpca,
    generate_sample,
    project_scores,
    variance_explained,
)
from funcdens.fpca import FpcaModel


def cos_basis(grid, J):
    j = np.arange(1, J + 1)[:, None]
    return np.sqrt(2.0) * np.cos(np.pi * j * grid.points[None, :])


def analytic_covariance(grid, theta):
    psi = cos_basis(grid, len(theta))
    return (np.asarray(theta)[:, None] * psi).T @ psi


# ---------------------------------------------------------------- covariance


def test_covariance_rank_one():
    g = Grid.uniform(0, 1, 21)
    gv = np.sin(np.pi * g.points)
    s = FunctionalSample(g, np.vstack([gv, -gv]))
    K = estimate_covariance(s)
    assert np.allclose(K, np.outer(gv, gv), atol=1e-14)


def test_covariance_identical_curves_zero():
    g = Grid.uniform(0, 1, 21)
    s = FunctionalSample(g, np.tile(np.sin(g.points), (4, 1)))
    assert np.allclose(estimate_covariance(s), 0.0, atol=1e-16)


def test_covariance_needs_two_curves():
    g = Grid.uniform(0, 1, 5)
    with pytest.raises(ValueError):
        estimate_covariance(FunctionalSample(g, np.ones((1, 5))))


def test_covariance_matches_generator_monte_carlo():
    # seeded MC check against the analytic covariance of model (iii);
    # tolerances calibrated with this oracle (worst entries sit near t=0)
    sample, truth = generate_sample(SimScenario("iii", n=1000, seed=[4242, 0]))
    K = estimate_covariance(sample)
    K_true = analytic_covariance(sample.grid, truth.eigenvalues)
    assert np.max(np.abs(K - K_true)) < 0.25
    assert np.linalg.norm(K - K_true) / np.linalg.norm(K_true) < 0.12


# ----------------------------------------------------------------- decompose


def test_decompose_rank_one_spectral_identity():
    g = Grid.uniform(0, 1, 101)
    gv = 2.0 * np.sqrt(2.0) * np.cos(np.pi * g.points)  # ||g||^2 = 4
    model = decompose(np.outer(gv, gv), g, J=3)
    assert abs(model.eigenvalues[0] - 4.0) < 1e-8
    assert model.eigenvalues[1] < 1e-8
    assert np.allclose(np.abs(model.eigenfunctions[0]), np.abs(gv) / 2.0, atol=1e-6)


def test_decompose_zero_matrix():
    g = Grid.uniform(0, 1, 11)
    model = decompose(np.zeros((11, 11)), g, J=4)
    assert np.all(model.eigenvalues == 0.0)


def test_decompose_analytic_eigenpairs():
    g = Grid.uniform(0, 1, 201)
    theta = np.arange(1, 6, dtype=float) ** -3.0
    model = decompose(analytic_covariance(g, theta), g, J=5)
    psi = cos_basis(g, 5)
    for j in range(5):
        assert abs(model.eigenvalues[j] - theta[j]) < 1e-3
        ip = np.sum(g.weights * model.eigenfunctions[j] * psi[j])
        assert abs(ip) > 0.999


def test_decompose_rejects_bad_input():
    g = Grid.uniform(0, 1, 5)
    asym = np.eye(5)
    asym[0, 1] = 1.0
    with pytest.raises(ValueError):
        decompose(asym, g, J=2)
    with pytest.raises(ValueError):
        decompose(np.eye(5), g, J=6)


def test_orthonormality_under_quadrature(model_iii_200):
    _, _, model, _ = model_iii_200
    G = (model.eigenfunctions * model.grid.weights) @ model.eigenfunctions.T
    assert np.max(np.abs(G - np.eye(model.n_components))) < 1e-8


def test_reconstruction_full_rank(rng):
    # all m components reproduce the weight-symmetrized covariance
    g = Grid.uniform(0, 1, 40)
    a = rng.standard_normal((60, 40))
    s = FunctionalSample(g, a)
    K = estimate_covariance(s)
    model = decompose(K, g, J=40)
    recon = (model.eigenfunctions * model.eigenvalues[:, None]).T @ model.eigenfunctions
    sw = np.sqrt(g.weights)
    lhs = sw[:, None] * recon * sw[None, :]
    rhs = sw[:, None] * K * sw[None, :]
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-6


def test_decompose_deterministic():
    g = Grid.uniform(0, 1, 51)
    K = analytic_covariance(g, [1.0, 0.25, 0.1])
    m1 = decompose(K, g, J=10)
    m2 = decompose(K.copy(), g, J=10)
    assert np.array_equal(m1.eigenvalues, m2.eigenvalues)
    assert np.array_equal(m1.eigenfunctions, m2.eigenfunctions)


def test_sign_convention_positive_integral(model_iii_200):
    _, _, model, _ = model_iii_200
    for j in range(model.n_components):
        s = np.sum(model.grid.weights * model.eigenfunctions[j])
        if abs(s) > 1e-10:
            assert s > 0
        else:
            row = model.eigenfunctions[j]
            assert row[np.argmax(np.abs(row))] > 0


# -------------------------------------------------------------------- scores


def test_project_scores_unit_directions(model_iii_200):
    _, _, model, _ = model_iii_200
    g = model.grid
    x = Curve(g, model.mean.values + np.sqrt(model.eigenvalues[0]) * model.eigenfunctions[0])
    sc = project_scores(model, x)
    assert abs(sc[0] - 1.0) < 1e-8
    assert np.max(np.abs(sc[1:])) < 1e-8

    assert np.max(np.abs(project_scores(model, model.mean))) < 1e-10

    x2 = Curve(g, model.mean.values - 2.0 * np.sqrt(model.eigenvalues[1]) * model.eigenfunctions[1])
    sc2 = project_scores(model, x2)
    assert abs(sc2[1] + 2.0) < 1e-8
    assert abs(sc2[0]) < 1e-8


def test_project_scores_grid_mismatch(model_iii_200):
    _, _, model, _ = model_iii_200
    other = Grid.uniform(0, 2, len(model.grid))
    with pytest.raises(ValueError):
        project_scores(model, Curve(other, np.zeros(len(other))))


def test_null_components_reported_absent():
    g = Grid.uniform(0, 1, 31)
    gv = np.sqrt(2.0) * np.cos(np.pi * g.points)
    s = FunctionalSample(g, np.vstack([gv, -gv, 2 * gv, -2 * gv]))  # rank 1
    model = fit_fpca(s, J=3)
    assert model.null_components[1] and model.null_components[2]
    sc = project_scores(model, s.curve(0))
    assert np.isfinite(sc[0])
    assert np.isnan(sc[1]) and np.isnan(sc[2])
    assert np.all(np.isnan(model.scores[:, 1:]))


def test_training_scores_standardized(model_iii_200):
    _, _, model, _ = model_iii_200
    usable = ~model.null_components
    means = model.scores[:, usable].mean(axis=0)
    variances = model.scores[:, usable].var(axis=0)  # divisor n
    assert np.max(np.abs(means)) < 1e-8
    assert np.max(np.abs(variances - 1.0)) < 1e-6


def test_fpca_statistical_recovery():
    # model (iii), n=1000: leading eigenpairs close to the generator's
    sample, truth = generate_sample(SimScenario("iii", n=1000, seed=[777, 0]))
    model = fit_fpca(sample, J=10)
    psi = truth.eigenfunctions
    for j in range(3):
        assert abs(model.eigenvalues[j] / truth.eigenvalues[j] - 1.0) < 0.2
        ip = np.sum(sample.grid.weights * model.eigenfunctions[j] * psi[j])
        assert abs(ip) > 0.95


# -------------------------------------------------------- variance explained


def test_variance_explained_examples():
    g = Grid.uniform(0, 1, 101)
    rank1 = decompose(analytic_covariance(g, [2.0]), g, J=1)
    assert variance_explained(rank1, 1) == pytest.approx(1.0)

    model = FpcaModel(
        grid=g,
        mean=Curve(g, np.zeros(101)),
        eigenvalues=np.array([3.0, 1.0]),
        eigenfunctions=cos_basis(g, 2),
    )
    assert variance_explained(model, 1) == pytest.approx(0.75)
    assert variance_explained(model, 2) == pytest.approx(1.0)


def test_variance_explained_model_iii_analytic():
    # direct oracle: 1 / sum_{j<=10} j^-3 = 0.8350512...
    g = Grid.uniform(0, 1, 201)
    theta = np.arange(1, 11, dtype=float) ** -3.0
    model = decompose(analytic_covariance(g, theta), g, J=10)
    expected = theta[0] / theta.sum()
    assert abs(expected - 0.8350512) < 1e-6
    assert abs(variance_explained(model, 1) - expected) < 2e-3
    props = [variance_explained(model, j) for j in range(1, 11)]
    assert np.all(np.diff(props) >= 0)
    assert props[-1] == pytest.approx(1.0)


def test_variance_explained_zero_total():
    g = Grid.uniform(0, 1, 11)
    model = decompose(np.zeros((11, 11)), g, J=2)
    with pytest.raises(ValueError):
        variance_explained(model, 1)


def test_fit_fpca_default_components():
    sample, _ = generate_sample(SimScenario("iii", n=15, m=51, seed=3))
    model = fit_fpca(sample)
    assert model.n_components == 15  # min(n, m, 20)
    with pytest.raises(ValueError):
        fit_fpca(sample, J=16)
