"""
Posterior computation under an exponential power prior.

``coordinate_descent_mode`` finds the posterior mode, i.e. the minimizer of

    ||y - X beta||^2 / (2 sigma2) + lam * sum_j |beta_j|^q,

one coordinate at a time through ``mode_threshold``. ``gibbs_sampler`` draws
from the posterior using the representation of the prior as a scale mixture
of uniforms: beta_j | gamma_j ~ uniform(-Delta_j, Delta_j) with
Delta_j = c gamma_j^(1/q), c = sqrt(Gamma(1/q) / Gamma(3/q) * tau2 / 2) and
gamma_j ~ gamma(shape 1 + 1/q, rate 2^(-q/2)). Given beta_j the uniform
density leaves gamma_j a translated exponential,

    gamma_j = (|beta_j| / c)^q + Exponential(rate 2^(-q/2)),

and given gamma the coefficients follow the likelihood restricted to the box
|beta_j| <= Delta_j, sampled one coordinate at a time.
"""
import logging
import warnings
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.random import Generator
from pydantic import BaseModel, Field
from scipy.optimize import brentq
from scipy.special import gammaln

from ep_adaptive import streams
from ep_adaptive.arrays import FROZEN_ARRAYS, FloatArray
from ep_adaptive.config import DEFAULT_SOLVER, SIMULATION_CHAIN, ChainConfig, SolverConfig
from ep_adaptive.data import RegressionData
from ep_adaptive.diagnostics import MIN_CHAIN, ess_per_coordinate
from ep_adaptive.distributions import EpPrior, ep_sample
from ep_adaptive.errors import DomainError, InvariantViolation, NumericalError
from ep_adaptive.truncnorm import standard_truncated

logger = logging.getLogger(__name__)

# restart objectives closer than this count as the same optimum
RESTART_SPREAD = 1e-6


class ModeFit(BaseModel):
    model_config = FROZEN_ARRAYS

    beta: FloatArray
    objective: float
    sparsity_rate: float = Field(ge=0, le=1)
    iterations: int
    converged: bool
    restarts: int
    objective_history: FloatArray
    restart_objectives: Optional[FloatArray] = None


class PosteriorDraws(BaseModel):
    """
    Retained draws of beta (rows) with the final latent mixing weights gamma
    and the box half-widths Delta in force for every retained draw
    """
    model_config = FROZEN_ARRAYS

    draws: FloatArray
    half_widths: FloatArray
    mixing_weights: FloatArray
    ess_per_coordinate: FloatArray
    burn_in: int
    thinning: int
    iters: int

    @property
    def retained(self) -> int:
        return self.draws.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)

    @property
    def median(self) -> np.ndarray:
        return np.median(self.draws, axis=0)

    def quantiles(self, probs: Sequence[float] = (.025, .975)) -> np.ndarray:
        """Rows follow ``probs``"""
        return np.quantile(self.draws, probs, axis=0)

    @property
    def min_ess(self) -> float:
        return float(self.ess_per_coordinate.min())


def _scalar_objective(beta: float, b: float, sigma2: float, lam: float, q: float) -> float:
    return (beta - b) ** 2 / (2. * sigma2) + lam * abs(beta) ** q


def mode_threshold(b_ols: float, sigma2: float, prior: EpPrior) -> float:
    """
    Global minimizer of (b_ols - beta)^2 / (2 sigma2) + lam |beta|^q
    """
    if sigma2 <= 0:
        raise DomainError(f'sigma2 must be positive, got {sigma2}')
    if not np.isfinite(b_ols):
        raise DomainError(f'b_ols must be finite, got {b_ols}')
    b = abs(float(b_ols))
    if b == 0.:
        return 0.
    sign = 1. if b_ols > 0 else -1.
    q, lam = prior.q, prior.lam

    if q == 1.:
        return sign * max(b - sigma2 * lam, 0.)
    if q == 2.:
        return sign * b / (1. + 2. * sigma2 * lam)

    def grad(beta):
        return (beta - b) / sigma2 + lam * q * beta ** (q - 1.)

    if q > 1.:
        return sign * brentq(grad, 0., b, xtol=1e-15, maxiter=200)

    # q < 1: grad is convex on (0, inf) with its minimum at beta_min
    beta_min = (sigma2 * lam * q * (1. - q)) ** (1. / (2. - q))
    if beta_min >= b or grad(beta_min) >= 0.:
        return 0.
    root = brentq(grad, beta_min, b, xtol=1e-15, maxiter=200)
    if _scalar_objective(root, b, sigma2, lam, q) < b * b / (2. * sigma2):
        return sign * root
    return 0.


def penalized_objective(data: RegressionData, beta: np.ndarray, prior: EpPrior, sigma2: float) -> float:
    resid = data.y - data.X @ beta
    return float(resid @ resid / (2. * sigma2) + prior.lam * np.sum(np.abs(beta) ** prior.q))


def _descend(data: RegressionData, prior: EpPrior, sigma2: float, beta: np.ndarray,
             solver: SolverConfig) -> Tuple[np.ndarray, np.ndarray, int, bool]:
    xtx, xty = data.xtx, data.xty
    diag = np.diag(xtx).copy()
    active = np.flatnonzero(diag > 0)
    beta = beta.copy()
    beta[diag <= 0] = 0.
    grad = xty - xtx @ beta
    history = [penalized_objective(data, beta, prior, sigma2)]
    converged = False
    it = 0
    for it in range(1, solver.max_iter + 1):
        max_change = 0.
        for j in active:
            old = beta[j]
            b = (grad[j] + diag[j] * old) / diag[j]
            new = mode_threshold(b, sigma2 / diag[j], prior)
            if new != old:
                grad -= xtx[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        value = penalized_objective(data, beta, prior, sigma2)
        if not np.isfinite(value):
            raise NumericalError(
                'coordinate descent produced a non-finite objective',
                state={'iteration': it, 'beta': beta.tolist(), 'sigma2': sigma2, 'q': prior.q},
            )
        history.append(value)
        if max_change < solver.tol:
            converged = True
            break
    return beta, np.array(history), it, converged


def coordinate_descent_mode(data: RegressionData, prior: EpPrior, sigma2: float, init=None,
                            solver: SolverConfig = DEFAULT_SOLVER, seed: int = 0) -> ModeFit:
    """
    Posterior mode by cyclic coordinate descent. For q >= 1 the problem is
    convex and one run from ``init`` (zero by default) is made. For q < 1 the
    run is repeated from ``solver.restarts`` starting points drawn from the
    prior (plus ``init`` when given) and the lowest objective is kept.
    """
    if sigma2 <= 0:
        raise DomainError(f'sigma2 must be positive, got {sigma2}')
    p = data.p
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.shape != (p,):
            raise DomainError(f'init has shape {init.shape}, expected ({p},)')

    if prior.q >= 1.:
        starts = [init if init is not None else np.zeros(p)]
    else:
        starts = [init] if init is not None else []
        starts += [
            ep_sample(p, prior, streams.substream(seed, streams.RESTARTS, r)) for r in range(solver.restarts)
        ]

    runs = [_descend(data, prior, sigma2, start, solver) for start in starts]
    finals = np.array([history[-1] for _, history, _, _ in runs])
    best = int(np.argmin(finals))
    beta, history, iterations, converged = runs[best]

    if len(runs) > 1:
        spread = float(finals.max() - finals.min())
        if spread > RESTART_SPREAD:
            logger.warning('mode restarts ended at objectives spread over %.3g (best %.10g)', spread, finals[best])
            warnings.warn('coordinate descent restarts reached different local optima', stacklevel=2)
    if not converged:
        logger.warning('coordinate descent stopped after %d sweeps without converging', iterations)

    return ModeFit(
        beta=beta,
        objective=float(history[-1]),
        sparsity_rate=float(np.mean(beta == 0.)),
        iterations=iterations,
        converged=converged,
        restarts=len(runs),
        objective_history=history,
        restart_objectives=finals if len(runs) > 1 else None,
    )


def _mixture_scale(prior: EpPrior) -> float:
    """c with Delta = c * gamma^(1/q)"""
    q = prior.q
    return float(np.exp(.5 * (gammaln(1. / q) - gammaln(3. / q) + np.log(prior.tau2 / 2.))))


def _box_sweep(beta: np.ndarray, grad: np.ndarray, rows: List[np.ndarray], diag: List[float], sd: List[float],
               informative: List[bool], delta: List[float], u: List[float]):
    """
    One pass over the coordinates: beta_j from the likelihood restricted to
    |beta_j| <= Delta_j at uniform u_j, keeping grad = X^T y - X^T X beta
    """
    for j, row in enumerate(rows):
        old = float(beta[j])
        half = delta[j]
        if informative[j]:
            s = sd[j]
            mean = float(grad[j]) / diag[j] + old
            new = mean + s * standard_truncated((-half - mean) / s, (half - mean) / s, u[j])
            new = min(max(new, -half), half)
        else:
            new = half * (2. * u[j] - 1.)
        if new != old:
            grad -= row * (new - old)
            beta[j] = new


def gibbs_sampler(data: RegressionData, prior: EpPrior, sigma2: float, chain: ChainConfig = SIMULATION_CHAIN,
                  rng: Optional[Generator] = None, use_likelihood: bool = True) -> PosteriorDraws:
    """
    Posterior draws of beta; ``use_likelihood=False`` drops the likelihood so
    the chain targets the prior
    """
    if sigma2 <= 0:
        raise DomainError(f'sigma2 must be positive, got {sigma2}')
    if chain.retained < MIN_CHAIN:
        raise DomainError(f'chain keeps {chain.retained} draws, at least {MIN_CHAIN} are needed')
    rng = rng if rng is not None else streams.substream(0, streams.GIBBS)

    p, q = data.p, prior.q
    xtx, xty = data.xtx, data.xty
    diag = np.diag(xtx).copy()
    informative = (diag > 0) & use_likelihood
    # X^T X is symmetric, so its rows are the columns the residual update needs
    rows = [np.ascontiguousarray(xtx[j]) for j in range(p)]
    diag_list = np.where(diag > 0, diag, 1.).tolist()
    sd_list = np.sqrt(sigma2 / np.asarray(diag_list)).tolist()
    informative_list = informative.tolist()
    c = _mixture_scale(prior)
    rate = 2. ** (-q / 2.)

    beta = np.zeros(p)
    grad = xty.copy()
    gamma = np.zeros(p)
    draws = np.empty((chain.retained, p))
    widths = np.empty((chain.retained, p))
    row = 0

    for it in range(chain.iters):
        gamma = (np.abs(beta) / c) ** q + rng.exponential(1. / rate, size=p)
        delta = c * gamma ** (1. / q)
        if np.any(np.abs(beta) > delta * (1. + 1e-12)):
            raise InvariantViolation(f'box |beta_j| <= Delta_j violated at sweep {it}')

        if not use_likelihood:
            beta = rng.uniform(-delta, delta)
        else:
            _box_sweep(beta, grad, rows, diag_list, sd_list, informative_list, delta.tolist(), rng.random(p).tolist())

        if it >= chain.burn_in and (it - chain.burn_in) % chain.thinning == 0:
            draws[row] = beta
            widths[row] = delta
            row += 1
        if (it + 1) % 1000 == 0:
            logger.debug('gibbs sweep %d / %d', it + 1, chain.iters)

    ess, _ = ess_per_coordinate(draws)
    return PosteriorDraws(
        draws=draws,
        half_widths=widths,
        mixing_weights=gamma,
        ess_per_coordinate=ess,
        burn_in=chain.burn_in,
        thinning=chain.thinning,
        iters=chain.iters,
    )
