import numpy as np
import pytest

from ep_adaptive import adaptive
from ep_adaptive.adaptive import (
    adaptive_estimate, check_variances, laplace_estimate, mean_squared_error, miss_rate, zero_pattern_match,
)
from ep_adaptive.config import Summary
from ep_adaptive.data import standardize
from ep_adaptive.eb_estimation import VarianceEstimates
from ep_adaptive.errors import BoundaryVarianceError


def test_accepted_test_uses_laplace_prior(accept_data, quick_config):
    result = adaptive_estimate(accept_data, config=quick_config)
    assert not result.test.reject
    assert result.q_used == 1.
    assert result.prior.q == 1.
    assert result.label == 'laplace'

    mode, draws = laplace_estimate(standardize(accept_data), result.variances, Summary.both, quick_config)
    np.testing.assert_array_equal(result.mode.beta, mode.beta)
    np.testing.assert_array_equal(result.draws.draws, draws.draws)


def test_rejected_test_uses_estimated_shape(reject_data, quick_config):
    result = adaptive_estimate(reject_data, config=quick_config)
    assert result.test.reject
    assert result.q_used == result.q_estimate.q_hat
    assert result.q_used > 2.
    assert result.label == 'exponential_power'
    assert result.prior.tau2 == result.variances.tau2_hat


def test_gate_off_always_uses_estimated_shape(accept_data, reject_data, quick_config):
    ungated = quick_config.model_copy(update={'gate': False})
    gated_result = adaptive_estimate(reject_data, config=quick_config)
    ungated_result = adaptive_estimate(reject_data, config=ungated)
    np.testing.assert_array_equal(gated_result.mode.beta, ungated_result.mode.beta)
    np.testing.assert_array_equal(gated_result.posterior_mean, ungated_result.posterior_mean)

    result = adaptive_estimate(accept_data, config=ungated)
    assert not result.test.reject
    assert result.q_used == result.q_estimate.q_hat


def test_posterior_mean_is_draws_mean(accept_data, quick_config):
    result = adaptive_estimate(accept_data, config=quick_config)
    np.testing.assert_array_equal(result.posterior_mean, result.draws.draws.mean(axis=0))
    assert result.draws.retained == quick_config.chain.retained


@pytest.mark.parametrize('summary', [Summary.mode, Summary.mean])
def test_single_summary(accept_data, quick_config, summary):
    result = adaptive_estimate(accept_data, summary=summary, config=quick_config)
    assert (result.mode is not None) == (summary == Summary.mode)
    assert (result.draws is not None) == (summary == Summary.mean)
    assert (result.posterior_mean is None) == (summary == Summary.mode)


def test_estimates_are_reproducible(reject_data, quick_config):
    a = adaptive_estimate(reject_data, config=quick_config)
    b = adaptive_estimate(reject_data, config=quick_config)
    assert a.test == b.test
    np.testing.assert_array_equal(a.draws.draws, b.draws.draws)


@pytest.mark.parametrize('sigma2, tau2', [(0., 1.), (1., 0.)])
def test_boundary_estimates_are_refused(sigma2, tau2):
    variances = VarianceEstimates(sigma2_hat=sigma2, tau2_hat=tau2, at_boundary=True, objective_value=0.)
    with pytest.raises(BoundaryVarianceError) as info:
        check_variances(variances)
    assert info.value.estimates is variances
    assert ('sigma2' if sigma2 == 0. else 'tau2') in str(info.value)


def test_adaptive_estimate_stops_on_boundary(accept_data, quick_config, monkeypatch):
    boundary = VarianceEstimates(sigma2_hat=0., tau2_hat=1., at_boundary=True, objective_value=0.)
    monkeypatch.setattr(adaptive, 'estimate_variances', lambda data: boundary)
    with pytest.raises(BoundaryVarianceError):
        adaptive_estimate(accept_data, config=quick_config)


def test_laplace_estimate_refuses_boundary(accept_data, quick_config):
    boundary = VarianceEstimates(sigma2_hat=1., tau2_hat=0., at_boundary=True, objective_value=0.)
    with pytest.raises(BoundaryVarianceError):
        laplace_estimate(accept_data, boundary, Summary.mode, quick_config)


def test_mean_squared_error():
    assert mean_squared_error([1., 2., 3.], [1., 2., 3.]) == 0.
    assert mean_squared_error([0., 0.], [1., 3.]) == pytest.approx(5.)


def test_zero_pattern_match():
    truth = np.array([0., 0., 1., -2.])
    assert zero_pattern_match(truth, truth) == 1.
    assert zero_pattern_match([0., 1., 1., 0.], truth) == .5
    assert zero_pattern_match(1. - (truth != 0.), truth) == 0.


def test_miss_rate():
    truth = np.array([0., 0., 1., -2.])
    assert miss_rate(truth, truth) == 0.
    assert miss_rate([.05, -.2, 1., -1.], truth) == .5
    assert miss_rate([.05, -.2, 1., -1.], truth, threshold=2.) == 0.
    assert 0. <= miss_rate(np.random.default_rng(0).standard_normal(4), truth) <= 1.
