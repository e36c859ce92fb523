import numpy as np
import pytest

from ep_adaptive import testing
from ep_adaptive.data import RegressionData, standardize
from ep_adaptive.distributions import EpPrior, ep_sample, solve_q_from_kurtosis
from ep_adaptive.eb_estimation import (
    DesignSpectrum, dense_variance_objective, design_spectrum, estimate_q, estimate_variances, variance_objective,
)
from ep_adaptive.errors import DegenerateInputError, DomainError
from ep_adaptive.testing import bias_constants, corrected_kurtosis, decompose_design, psi


def _simulated(n, p, seed, q=1.):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = ep_sample(p, EpPrior(tau2=1., q=q), rng)
    return RegressionData(y=X @ beta + rng.standard_normal(n), X=X)


def test_scalar_objective():
    spectrum = DesignSpectrum(eigenvalues=[1.], w=[1.5], null_ss=0., n=1)
    for tau2, sigma2 in [(1., 1.), (.2, 3.), (0., .5), (2., 0.)]:
        s = tau2 + sigma2
        assert variance_objective(tau2, sigma2, None, spectrum) == pytest.approx(np.log(s) + 1.5 ** 2 / s)
    # minimized where tau2 + sigma2 = y^2
    at_min = variance_objective(1., 1.25, None, spectrum)
    assert at_min < variance_objective(1., 1.2, None, spectrum)
    assert at_min < variance_objective(1., 1.3, None, spectrum)


@pytest.mark.parametrize('shape', [(5, 3), (4, 7), (12, 12)])
def test_spectral_objective_matches_dense(shape, rng):
    n, p = shape
    data = RegressionData(y=rng.standard_normal(n), X=rng.standard_normal(shape))
    spectrum = design_spectrum(data)
    for tau2, sigma2 in [(1., 1.), (.01, 3.), (5., .2), (2.5, 1e-3)]:
        assert variance_objective(tau2, sigma2, data, spectrum) == pytest.approx(
            dense_variance_objective(tau2, sigma2, data), abs=1e-10)


def test_objective_domain(rng):
    data = RegressionData(y=rng.standard_normal(5), X=rng.standard_normal((5, 3)))
    with pytest.raises(DomainError):
        variance_objective(-1., 1., data)
    # X X^T is singular, so tau2 alone does not give a covariance
    with pytest.raises(DomainError):
        variance_objective(1., 0., data)


def test_grid_oracle():
    grid = np.geomspace(1e-3, 1e3, 50)
    for seed in range(20):
        n, p = (40, 20) if seed % 2 else (25, 40)
        data = _simulated(n, p, seed)
        spectrum = design_spectrum(data)
        est = estimate_variances(data, spectrum)
        best = min(variance_objective(t, s, None, spectrum) for t in grid for s in grid)
        assert est.objective_value <= best + 1e-6
        assert est.objective_value == pytest.approx(
            variance_objective(est.tau2_hat, est.sigma2_hat, None, spectrum), abs=1e-9)


def test_scaling_y_scales_estimates():
    data = _simulated(80, 40, 3)
    base = estimate_variances(data)
    scaled = estimate_variances(data.with_response(3. * data.y))
    assert scaled.sigma2_hat == pytest.approx(9. * base.sigma2_hat, rel=1e-6)
    assert scaled.tau2_hat == pytest.approx(9. * base.tau2_hat, rel=1e-6)


def test_column_permutation_invariance(rng):
    data = _simulated(60, 30, 4)
    order = rng.permutation(data.p)
    a, b = estimate_variances(data), estimate_variances(data.permuted(order))
    assert b.sigma2_hat == pytest.approx(a.sigma2_hat, rel=1e-8)
    assert b.tau2_hat == pytest.approx(a.tau2_hat, rel=1e-8)


def test_tau2_boundary_for_response_orthogonal_to_design(rng):
    X = rng.standard_normal((20, 5))
    z = rng.standard_normal(20)
    y = z - X @ np.linalg.lstsq(X, z, rcond=None)[0]
    est = estimate_variances(RegressionData(y=y, X=X))
    assert est.at_boundary
    assert est.tau2_hat == 0.
    assert est.sigma2_hat == pytest.approx(y @ y / 20.)


def test_zero_response_rejected(rng):
    with pytest.raises(DegenerateInputError):
        estimate_variances(RegressionData(y=np.zeros(10), X=rng.standard_normal((10, 4))))


def test_estimate_q_inverts_laplace_kurtosis(make_regression):
    # five equal nonzero coefficients in thirty: kurtosis 30 / 5 = 6
    data = make_regression(np.r_[np.full(5, 1.5), np.zeros(25)], n=200, sigma=0.)
    est = estimate_q(data)
    assert est.kind == testing.TestKind.ols
    assert est.statistic == pytest.approx(6., rel=1e-8)
    assert est.q_hat == pytest.approx(1., rel=1e-6)
    assert not est.clamped


def test_estimate_q_ols_path(rng):
    data = _simulated(120, 40, 5, q=.5)
    est = estimate_q(data, testing.TestKind.ols)
    assert est.statistic == psi(testing.ols_estimate(data))
    assert est.q_hat == solve_q_from_kurtosis(est.statistic)


def test_estimate_q_ridge_path_is_bias_corrected():
    data = standardize(_simulated(40, 80, 6, q=.5))
    est = estimate_q(data)
    assert est.kind == testing.TestKind.ridge
    decomp = decompose_design(data.X)
    raw = corrected_kurtosis(psi(testing.ridge_estimate(data, decomp)), bias_constants(decomp))
    assert est.raw_kurtosis == pytest.approx(raw, rel=1e-12)


def test_estimate_q_clamps_light_tails(reject_data):
    with pytest.warns(UserWarning, match='clamped'):
        est = estimate_q(reject_data)
    assert est.clamped
    assert est.kurtosis == 1.9
    assert est.raw_kurtosis < 1.9
    assert est.q_hat == pytest.approx(solve_q_from_kurtosis(1.9))


def test_estimate_q_rejects_oracle_kind(accept_data):
    with pytest.raises(DomainError):
        estimate_q(accept_data, testing.TestKind.oracle)


@pytest.mark.slow
def test_variance_estimates_are_consistent():
    estimates = np.array([
        [e.sigma2_hat, e.tau2_hat] for e in (estimate_variances(_simulated(200, 100, 1000 + r)) for r in range(100))
    ])
    np.testing.assert_allclose(estimates.mean(axis=0), [1., 1.], rtol=.15)


@pytest.mark.slow
def test_q_estimates_track_the_shape():
    def q_hats(q):
        return np.array([estimate_q(_simulated(200, 100, 2000 + r, q=q)).q_hat for r in range(100)])

    small, large = q_hats(.25), q_hats(4.)
    assert np.median(small) < 1.
    iqr = lambda a: np.subtract(*np.percentile(a, [75, 25]))
    assert iqr(large) > iqr(small)


@pytest.mark.slow
def test_bias_correction_recovers_laplace_kurtosis():
    raw, corrected = [], []
    for r in range(200):
        data = standardize(_simulated(100, 100, 3000 + r, q=1.))
        kind, decomp, estimate = testing.select_statistic(data)
        assert kind == testing.TestKind.ridge
        raw.append(psi(estimate))
        corrected.append(corrected_kurtosis(raw[-1], bias_constants(decomp)))
    assert np.mean(corrected) == pytest.approx(6., abs=.5)
    assert abs(np.mean(raw) - 6.) > abs(np.mean(corrected) - 6.)
