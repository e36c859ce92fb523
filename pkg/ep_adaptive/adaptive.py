"""
Two-stage adaptive estimation: test a Laplace prior, then fit under the
Laplace prior when the test accepts and under an exponential power prior with
estimated shape when it rejects.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel

from ep_adaptive import streams
from ep_adaptive.arrays import FROZEN_ARRAYS, FloatArray
from ep_adaptive.config import RunConfig, Summary
from ep_adaptive.data import RegressionData, standardize
from ep_adaptive.distributions import EpPrior
from ep_adaptive.eb_estimation import QEstimate, VarianceEstimates, estimate_q, estimate_variances
from ep_adaptive.errors import BoundaryVarianceError
from ep_adaptive.solvers import ModeFit, PosteriorDraws, coordinate_descent_mode, gibbs_sampler
from ep_adaptive.testing import NullDistribution, TestOutcome, laplace_test

logger = logging.getLogger(__name__)


class AdaptiveResult(BaseModel):
    model_config = FROZEN_ARRAYS

    test: TestOutcome
    variances: VarianceEstimates
    q_estimate: QEstimate
    q_used: float
    prior: EpPrior
    mode: Optional[ModeFit] = None
    draws: Optional[PosteriorDraws] = None
    posterior_mean: Optional[FloatArray] = None

    @property
    def label(self) -> str:
        return 'laplace' if self.q_used == 1. else 'exponential_power'


def check_variances(variances: VarianceEstimates):
    """
    Raises BoundaryVarianceError when either variance estimate is zero, as
    neither the likelihood nor the prior is then usable
    """
    if variances.at_boundary:
        which = 'sigma2' if variances.sigma2_hat == 0. else 'tau2'
        raise BoundaryVarianceError(
            f'{which} estimate is on the boundary; estimation of beta is not possible',
            estimates=variances,
        )


def fit_summaries(data: RegressionData, prior: EpPrior, sigma2: float, summary: Summary,
                  config: RunConfig) -> Tuple[Optional[ModeFit], Optional[PosteriorDraws]]:
    """
    Posterior mode and/or Gibbs draws under ``prior``. Streams depend only on
    ``config.seed``, so fits of the same data under different priors share
    their random inputs.
    """
    mode = draws = None
    if summary.wants_mode:
        mode = coordinate_descent_mode(data, prior, sigma2, solver=config.solver, seed=config.seed)
    if summary.wants_mean:
        draws = gibbs_sampler(data, prior, sigma2, chain=config.chain,
                              rng=streams.substream(config.seed, streams.GIBBS))
    return mode, draws


def adaptive_estimate(data: RegressionData, alpha: Optional[float] = None, summary: Optional[Summary] = None,
                      config: RunConfig = RunConfig(), null: Optional[NullDistribution] = None) -> AdaptiveResult:
    """
    Runs the Laplace test, estimates (sigma2, tau2) and q, and computes the
    requested posterior summaries under q = 1 when the test accepts and under
    q_hat when it rejects. With ``config.gate`` off q_hat is always used.
    """
    alpha = config.alpha if alpha is None else alpha
    summary = config.summary if summary is None else summary
    if config.standardize and not data.standardized:
        data = standardize(data)

    test = laplace_test(data, alpha, config.mc_reps, config.seed, null=null, workers=config.workers)
    variances = estimate_variances(data)
    check_variances(variances)
    q_estimate = estimate_q(data, test.kind)

    q_used = 1. if config.gate and not test.reject else q_estimate.q_hat
    prior = EpPrior(tau2=variances.tau2_hat, q=q_used)
    logger.info('q_used=%.4f (q_hat=%.4f, reject=%s)', q_used, q_estimate.q_hat, test.reject)

    mode, draws = fit_summaries(data, prior, variances.sigma2_hat, summary, config)
    return AdaptiveResult(
        test=test,
        variances=variances,
        q_estimate=q_estimate,
        q_used=q_used,
        prior=prior,
        mode=mode,
        draws=draws,
        posterior_mean=draws.mean if draws is not None else None,
    )


def laplace_estimate(data: RegressionData, variances: VarianceEstimates, summary: Summary,
                     config: RunConfig) -> Tuple[Optional[ModeFit], Optional[PosteriorDraws]]:
    """Fit under a Laplace prior with the estimated variances"""
    check_variances(variances)
    prior = EpPrior(tau2=variances.tau2_hat, q=1.)
    return fit_summaries(data, prior, variances.sigma2_hat, summary, config)


def mean_squared_error(estimate, truth) -> float:
    return float(np.mean((np.asarray(estimate) - np.asarray(truth)) ** 2))


def zero_pattern_match(estimate, truth) -> float:
    """Proportion of coordinates whose zero / nonzero status is recovered"""
    return float(np.mean((np.asarray(estimate) == 0.) == (np.asarray(truth) == 0.)))


def miss_rate(estimate, truth, threshold: float = .1) -> float:
    """Proportion of coordinates with |beta_j - estimate_j| > threshold"""
    return float(np.mean(np.abs(np.asarray(truth) - np.asarray(estimate)) > threshold))
