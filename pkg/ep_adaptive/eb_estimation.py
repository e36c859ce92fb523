"""
Moment-based estimates of the error variance, the coefficient variance and
the prior shape.

The variances minimize

    log |tau2 X X^T + sigma2 I| + y^T (tau2 X X^T + sigma2 I)^-1 y

over the closed quadrant. With the eigendecomposition X X^T = U diag(lam) U^T
and w = U^T y the objective is a sum over eigenvalues. For a fixed ratio
rho = tau2 / sigma2 the optimal sigma2 is Q(rho) / n with
Q(rho) = sum w_i^2 / (lam_i rho + 1), so the fit reduces to a one dimensional
search over log rho, compared with the two boundary solutions tau2 = 0 and
sigma2 = 0.
"""
import logging
import warnings
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import minimize_scalar

from ep_adaptive.arrays import FROZEN_ARRAYS, FloatArray
from ep_adaptive.config import KURTOSIS_FLOOR
from ep_adaptive.data import RegressionData
from ep_adaptive.distributions import solve_q_from_kurtosis
from ep_adaptive.errors import DegenerateInputError, DomainError, OptimizationError
from ep_adaptive.testing import (
    DesignDecomposition, TestKind, bias_constants, corrected_kurtosis, decompose_design, ols_estimate, psi,
    ridge_estimate, select_statistic,
)

logger = logging.getLogger(__name__)

LOG_RHO_BOUNDS = (-12., 12.)
GRID_POINTS = 97
XATOL = 1e-10


class DesignSpectrum(BaseModel):
    """
    Nonzero part of the spectrum of X X^T: ``eigenvalues`` lam_i (descending),
    ``w = U^T y`` and the squared norm of y outside the span of U
    """
    model_config = FROZEN_ARRAYS

    eigenvalues: FloatArray
    w: FloatArray
    null_ss: float
    n: int

    @property
    def null_dim(self) -> int:
        return self.n - self.eigenvalues.size

    @cached_property
    def full_rank(self) -> bool:
        lam = self.eigenvalues
        return self.null_dim == 0 and bool(lam.size and lam[-1] > 1e-12 * lam[0])


class VarianceEstimates(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma2_hat: float
    tau2_hat: float
    at_boundary: bool
    objective_value: float
    log_rho: Optional[float] = None

    @model_validator(mode='after')
    def _check(self):
        if self.sigma2_hat < 0 or self.tau2_hat < 0:
            raise ValueError('variance estimates must be non-negative')
        if self.sigma2_hat == 0 and self.tau2_hat == 0:
            raise ValueError('variance estimates cannot both be zero')
        if self.at_boundary != (self.sigma2_hat == 0 or self.tau2_hat == 0):
            raise ValueError('at_boundary must flag a zero estimate')
        return self

    @property
    def sigma2_at_boundary(self) -> bool:
        return self.sigma2_hat == 0.


class QEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_hat: float
    kurtosis: float
    raw_kurtosis: float
    statistic: float
    kind: TestKind
    clamped: bool = False


def design_spectrum(data: RegressionData) -> DesignSpectrum:
    U, s, _ = np.linalg.svd(data.X, full_matrices=False)
    w = U.T @ data.y
    null_ss = max(float(data.y @ data.y - w @ w), 0.)
    return DesignSpectrum(eigenvalues=s ** 2, w=w, null_ss=null_ss, n=data.n)


def variance_objective(tau2: float, sigma2: float, data: Optional[RegressionData],
                       spectrum: Optional[DesignSpectrum] = None) -> float:
    """
    The variance objective evaluated through the spectrum of X X^T
    """
    if tau2 < 0 or sigma2 < 0:
        raise DomainError(f'variances must be non-negative, got tau2={tau2}, sigma2={sigma2}')
    spectrum = spectrum or design_spectrum(data)
    d = spectrum.eigenvalues * tau2 + sigma2
    if np.any(d <= 0) or (spectrum.null_dim and sigma2 == 0):
        raise DomainError('tau2 X X^T + sigma2 I is not positive definite')
    value = float(np.sum(np.log(d)) + np.sum(spectrum.w ** 2 / d))
    if spectrum.null_dim:
        value += spectrum.null_dim * np.log(sigma2) + spectrum.null_ss / sigma2
    return value


def dense_variance_objective(tau2: float, sigma2: float, data: RegressionData) -> float:
    """
    The same objective from the n x n covariance matrix
    """
    cov = tau2 * data.X @ data.X.T + sigma2 * np.eye(data.n)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DomainError('tau2 X X^T + sigma2 I is not positive definite')
    return float(logdet + data.y @ np.linalg.solve(cov, data.y))


def _profile(log_rho: float, spectrum: DesignSpectrum):
    """Returns (profiled objective, sigma2) at rho = exp(log_rho)"""
    d = spectrum.eigenvalues * np.exp(log_rho) + 1.
    Q = float(np.sum(spectrum.w ** 2 / d) + spectrum.null_ss)
    n = spectrum.n
    if Q <= 0:
        return -np.inf, 0.
    return float(np.sum(np.log(d)) + n * np.log(Q / n) + n), Q / n


def estimate_variances(data: RegressionData, spectrum: Optional[DesignSpectrum] = None) -> VarianceEstimates:
    """
    Minimizer of the variance objective over sigma2 >= 0, tau2 >= 0; boundary
    solutions are flagged rather than rejected
    """
    if not np.any(data.y):
        raise DegenerateInputError('response is identically zero')
    spectrum = spectrum or design_spectrum(data)
    n = spectrum.n

    grid = np.linspace(*LOG_RHO_BOUNDS, GRID_POINTS)
    values = np.array([_profile(t, spectrum)[0] for t in grid])
    if not np.all(np.isfinite(values)):
        raise OptimizationError(
            'variance objective is unbounded below; y lies in the column space of X',
            diagnostics={'null_ss': spectrum.null_ss, 'null_dim': spectrum.null_dim},
        )
    i = int(np.argmin(values))
    bounds = (grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)])
    res = minimize_scalar(lambda t: _profile(t, spectrum)[0], method='bounded', bounds=bounds,
                          options={'xatol': XATOL, 'maxiter': 500})
    if not res.success:
        raise OptimizationError(
            'failed to minimize the profiled variance objective',
            diagnostics={'message': str(res.message), 'bounds': bounds, 'grid_min': float(values[i])},
        )
    if res.fun <= values[i]:
        log_rho, interior = float(res.x), float(res.fun)
    else:
        log_rho, interior = float(grid[i]), float(values[i])
    if LOG_RHO_BOUNDS[1] - log_rho < 1e-3 and not spectrum.full_rank:
        raise OptimizationError(
            'profiled variance objective decreases without bound in tau2 / sigma2',
            diagnostics={'log_rho': log_rho, 'null_ss': spectrum.null_ss, 'null_dim': spectrum.null_dim},
        )
    _, sigma2 = _profile(log_rho, spectrum)
    candidates = [(interior, sigma2, sigma2 * np.exp(log_rho), log_rho)]

    # tau2 = 0
    yty = float(spectrum.w @ spectrum.w + spectrum.null_ss)
    candidates.append((n * np.log(yty / n) + n, yty / n, 0., None))

    # sigma2 = 0, feasible only when X X^T is nonsingular
    if spectrum.full_rank:
        lam = spectrum.eigenvalues
        tau2 = float(np.sum(spectrum.w ** 2 / lam) / n)
        if tau2 > 0:
            candidates.append((float(np.sum(np.log(lam)) + n * np.log(tau2) + n), 0., tau2, None))

    value, sigma2, tau2, log_rho = min(candidates, key=lambda c: c[0])
    out = VarianceEstimates(
        sigma2_hat=sigma2, tau2_hat=tau2, at_boundary=sigma2 == 0. or tau2 == 0.,
        objective_value=value, log_rho=log_rho,
    )
    if out.at_boundary:
        logger.info('variance estimates on the boundary: sigma2=%g, tau2=%g', sigma2, tau2)
    else:
        logger.debug('variance estimates sigma2=%g, tau2=%g (log rho %.4f)', sigma2, tau2, log_rho)
    return out


def estimate_q(data: RegressionData, test_kind: Optional[TestKind] = None,
               decomp: Optional[DesignDecomposition] = None) -> QEstimate:
    """
    Kurtosis estimate of the coefficients inverted to a shape q. The OLS path
    uses psi(beta_ols) directly, the ridge path its bias-corrected value.
    Estimates below the invertible range are clamped to its edge.
    """
    if test_kind is None:
        test_kind, decomp, estimate = select_statistic(data)
    elif test_kind == TestKind.ols:
        estimate = ols_estimate(data)
    elif test_kind == TestKind.ridge:
        decomp = decomp or decompose_design(data.X)
        estimate = ridge_estimate(data, decomp)
    else:
        raise DomainError(f'q is estimated from the ols or ridge statistic, not {test_kind.value}')

    statistic = psi(estimate)
    raw = statistic if test_kind == TestKind.ols else corrected_kurtosis(statistic, bias_constants(decomp))
    clamped = not raw >= KURTOSIS_FLOOR
    kurt = KURTOSIS_FLOOR if clamped else raw
    if clamped:
        logger.warning('kurtosis estimate %.4g below %s; clamped', raw, KURTOSIS_FLOOR)
        warnings.warn('kurtosis estimate below the invertible range was clamped', stacklevel=2)
    q_hat = solve_q_from_kurtosis(kurt)
    logger.debug('%s kurtosis %.4f -> q %.4f', test_kind.value, kurt, q_hat)
    return QEstimate(
        q_hat=q_hat, kurtosis=kurt, raw_kurtosis=raw, statistic=statistic, kind=test_kind, clamped=clamped,
    )
