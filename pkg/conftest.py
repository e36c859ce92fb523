import numpy as np
import pytest

from ep_adaptive.config import ChainConfig, RunConfig, SolverConfig
from ep_adaptive.data import RegressionData


def regression(beta, n: int, sigma: float = 1., seed: int = 0) -> RegressionData:
    beta = np.asarray(beta, dtype=float)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, beta.size))
    return RegressionData(y=X @ beta + sigma * rng.standard_normal(n), X=X)


@pytest.fixture
def make_regression():
    return regression


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def accept_data() -> RegressionData:
    """Coefficients with empirical kurtosis exactly 6, little noise"""
    beta = np.r_[np.full(4, 2.), np.zeros(20)]
    return regression(beta, n=400, sigma=.2, seed=1)


@pytest.fixture
def reject_data() -> RegressionData:
    """Coefficients of constant magnitude (empirical kurtosis 1)"""
    beta = np.tile([1., -1.], 12)
    return regression(beta, n=400, sigma=.2, seed=2)


@pytest.fixture
def quick_config() -> RunConfig:
    return RunConfig(
        seed=7,
        mc_reps=5000,
        chain=ChainConfig(iters=300, burn_in=50, thinning=1),
        solver=SolverConfig(tol=1e-10, max_iter=500, restarts=4),
    )
