"""
Exponential power family and the Bernoulli-normal spike-and-slab.

The exponential power (EP) distribution is parameterized by its variance
``tau2`` and shape ``q``; ``q = 1`` is the Laplace and ``q = 2`` the normal
distribution. Every gamma-function ratio is evaluated on the log scale.
"""
import logging
from math import isfinite, log

import numpy as np
from numpy.random import Generator
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy.special import digamma, gammaln

from ep_adaptive.config import KURTOSIS_FLOOR
from ep_adaptive.errors import DomainError, KurtosisRangeError

logger = logging.getLogger(__name__)

# ep_kurtosis(q) -> 9/5 as q -> inf
KURTOSIS_INFIMUM = 1.8


def _log_gamma_ratio(q: float) -> float:
    """log(Gamma(3/q) / Gamma(1/q))"""
    return gammaln(3. / q) - gammaln(1. / q)


class EpPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau2: float = Field(gt=0)
    q: float = Field(gt=0)

    @computed_field
    @property
    def lam(self) -> float:
        """
        Penalty weight of the matching l_q problem,
        tau2^(-q/2) * (Gamma(3/q) / Gamma(1/q))^(q/2)
        """
        return float(np.exp(.5 * self.q * (_log_gamma_ratio(self.q) - log(self.tau2))))

    @property
    def kurtosis(self) -> float:
        return ep_kurtosis(self.q)

    @property
    def scale(self) -> float:
        """
        Scale s such that |beta| = s * G^(1/q) for G ~ gamma(1/q, 1)
        """
        return float(np.exp(.5 * (log(self.tau2) - _log_gamma_ratio(self.q))))


class SpikeSlab(BaseModel):
    model_config = ConfigDict(frozen=True)

    pi: float = Field(gt=0, le=1)
    tau2: float = Field(gt=0)

    @property
    def slab_variance(self) -> float:
        return self.tau2 / self.pi

    @property
    def kurtosis(self) -> float:
        return 3. / self.pi


def ep_log_density(beta, prior: EpPrior):
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise DomainError('EP density is defined for finite beta only')
    q = prior.q
    log_ratio = _log_gamma_ratio(q)
    log_norm = (
        log(q) - log(2.) - .5 * log(prior.tau2)
        + .5 * (gammaln(3. / q) - 3. * gammaln(1. / q))
    )
    return log_norm - np.exp(.5 * q * log_ratio) * np.abs(beta / np.sqrt(prior.tau2)) ** q


def ep_density(beta, prior: EpPrior):
    """
    EP density with variance ``prior.tau2`` and shape ``prior.q``; accepts a
    scalar or an array
    """
    return np.exp(ep_log_density(beta, prior))


def ep_sample(count: int, prior: EpPrior, rng: Generator) -> np.ndarray:
    """
    Draws ``count`` i.i.d. EP variates as a random sign times
    ``prior.scale * G^(1/q)`` with ``G ~ gamma(1/q, 1)``
    """
    if count < 1:
        raise DomainError(f'count must be positive, got {count}')
    g = rng.gamma(shape=1. / prior.q, scale=1., size=count)
    sign = np.where(rng.random(count) < .5, -1., 1.)
    with np.errstate(divide='ignore'):
        magnitude = np.exp(np.log(g) / prior.q + log(prior.scale))
    return sign * magnitude


def ep_kurtosis(q: float) -> float:
    """
    Kurtosis kappa + 3 = Gamma(5/q) Gamma(1/q) / Gamma(3/q)^2
    """
    if not (isfinite(q) and q > 0):
        raise DomainError(f'shape q must be positive and finite, got {q}')
    return float(np.exp(gammaln(5. / q) + gammaln(1. / q) - 2. * gammaln(3. / q)))


def _log_kurtosis_slope(q: float) -> float:
    """d log ep_kurtosis(q) / d log q"""
    return float((6. * digamma(3. / q) - 5. * digamma(5. / q) - digamma(1. / q)) / q)


def solve_q_from_kurtosis(kurt: float, tol: float = 1e-14, max_iter: int = 200) -> float:
    """
    Inverts ep_kurtosis by safeguarded Newton iterations on log q, falling back
    to bisection whenever a Newton step leaves the current bracket
    """
    if not isfinite(kurt) or kurt < KURTOSIS_FLOOR:
        raise KurtosisRangeError(
            f'kurtosis {kurt} is outside the invertible range [{KURTOSIS_FLOOR}, inf)'
        )
    target = log(kurt)

    def f(t):
        return log(ep_kurtosis(float(np.exp(t)))) - target

    # f is decreasing in t = log q
    lo, hi = -1., 1.
    f_lo, f_hi = f(lo), f(hi)
    for _ in range(60):
        if f_lo > 0:
            break
        lo -= 1.
        f_lo = f(lo)
    for _ in range(60):
        if f_hi < 0:
            break
        hi += 1.
        f_hi = f(hi)
    if f_lo < 0 or f_hi > 0:
        raise KurtosisRangeError(f'could not bracket q for kurtosis {kurt}')
    if f_lo == 0:
        return float(np.exp(lo))
    if f_hi == 0:
        return float(np.exp(hi))

    t = log(2.) if lo < log(2.) < hi else .5 * (lo + hi)
    for it in range(max_iter):
        ft = f(t)
        if ft == 0:
            break
        if ft > 0:
            lo = t
        else:
            hi = t
        step = ft / _log_kurtosis_slope(float(np.exp(t)))
        t_new = t - step
        if not (lo < t_new < hi):
            t_new = .5 * (lo + hi)
        if abs(t_new - t) <= tol * max(1., abs(t)):
            t = t_new
            break
        t = t_new
    else:
        logger.warning('Newton inversion of kurtosis %s stopped after %d iterations', kurt, max_iter)
    return float(np.exp(t))


def spike_slab_sample(count: int, ss: SpikeSlab, rng: Generator) -> np.ndarray:
    """
    Each coordinate is 0 with probability 1 - pi and N(0, tau2 / pi) otherwise
    """
    if count < 1:
        raise DomainError(f'count must be positive, got {count}')
    slab = rng.random(count) < ss.pi
    return np.where(slab, rng.normal(0., np.sqrt(ss.slab_variance), size=count), 0.)
