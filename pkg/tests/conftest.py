import numpy as np
import pytest

from funcdens import SimScenario, fit_fpca, fit_score_density, generate_sample


@pytest.fixture(scope="session")
def model_iii_200():
    """Small model-(iii) fit shared by tests that only need a valid pipeline."""
    sample, truth = generate_sample(SimScenario("iii", n=200, seed=2024))
    model = fit_fpca(sample, J=10)
    densities = [fit_score_density(model.scores[:, j]) for j in range(10)]
    return sample, truth, model, densities


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
