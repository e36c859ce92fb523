"""
Kurtosis test of H: q = 1.

The statistic psi is the empirical kurtosis m4/m2^2 of a coefficient vector.
It is evaluated on the OLS estimate when X^T X is well conditioned and on the
ridge estimate V^-1 (C + delta2 I)^-1 V^-1 X^T y otherwise; its null
distribution is simulated from i.i.d. Laplace coefficients, mapped through the
ridge shrinkage for the ridge statistic.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import LinAlgError, solve

from ep_adaptive import streams
from ep_adaptive.arrays import FROZEN_ARRAYS, FloatArray
from ep_adaptive.config import EIGEN_FLOOR, RIDGE_RCOND
from ep_adaptive.data import RegressionData
from ep_adaptive.errors import DegenerateInputError, DomainError, NotIdentifiableError

logger = logging.getLogger(__name__)

NULL_CHUNK = 10000
OLS_RCOND = 1e-12


class TestKind(str, Enum):
    oracle = 'oracle'
    ols = 'ols'
    ridge = 'ridge'


class DesignDecomposition(BaseModel):
    """
    X^T X = V C V with V = diag(v), v = sqrt(diag(X^T X)); ``eigenvalues`` of C
    in descending order and ``D = V^-1 (C + delta2 I)^-1 V^-1``
    """
    model_config = FROZEN_ARRAYS

    xtx: FloatArray
    v: FloatArray
    C: FloatArray
    eigenvalues: FloatArray
    eigenvectors: FloatArray
    delta2: float
    D: FloatArray

    @property
    def p(self) -> int:
        return self.v.size

    @property
    def V(self) -> np.ndarray:
        return np.diag(self.v)

    @cached_property
    def shrinkage(self) -> np.ndarray:
        """V^-1 (C + delta2 I)^-1 C V, the map beta -> E[beta_delta | beta]"""
        return self.D @ self.xtx

    @cached_property
    def sigma_delta(self) -> np.ndarray:
        return self.D @ self.xtx @ self.D

    @property
    def trace_bound(self) -> float:
        """tr(Sigma_delta) / p; tr((X^T X)^-1) / p when delta2 = 0"""
        return float(np.trace(self.sigma_delta) / self.p)


class BiasConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    gamma_const: float
    omega: float


class TestOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: float
    lower_quantile: float
    upper_quantile: float
    reject: bool
    null_tail_prob: float
    kind: TestKind
    mc_reps: int
    alpha: float
    n: int
    p: int
    delta2: float = 0.
    bound_surrogate: Optional[float] = None
    styan_bound: Optional[float] = None


class NullDistribution(BaseModel):
    """
    Sorted Monte Carlo draws of psi under q = 1
    """
    model_config = FROZEN_ARRAYS

    statistics: FloatArray
    kind: TestKind
    p: int

    @property
    def mc_reps(self) -> int:
        return self.statistics.size

    def quantiles(self, alpha: float) -> Tuple[float, float]:
        lo, hi = np.quantile(self.statistics, [alpha / 2., 1. - alpha / 2.])
        return float(lo), float(hi)

    def tail_prob(self, statistic: float) -> float:
        """Pr(psi* <= statistic)"""
        return float(np.searchsorted(self.statistics, statistic, side='right') / self.statistics.size)


def _moments_ratio(beta: np.ndarray, axis=None) -> np.ndarray:
    scale = np.max(np.abs(beta), axis=axis, keepdims=True)
    b2 = (beta / scale) ** 2
    m2 = np.mean(b2, axis=axis)
    m4 = np.mean(b2 * b2, axis=axis)
    return m4 / (m2 * m2)


def psi(beta) -> float:
    """
    Empirical kurtosis m4(beta) / m2(beta)^2
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size < 2:
        raise DomainError(f'psi needs a vector of length >= 2, got shape {beta.shape}')
    if not np.any(beta):
        raise DegenerateInputError('psi is undefined for the zero vector')
    return float(_moments_ratio(beta))


def psi_rows(betas: np.ndarray) -> np.ndarray:
    return _moments_ratio(np.asarray(betas, dtype=float), axis=1)


def _empirical_moment(beta: np.ndarray, k: int) -> float:
    return float(np.mean(beta ** k))


def choose_delta2(eigenvalues) -> float:
    """
    Recommended ridge constant (1 - min_j eta_j)_+
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    return float(max(0., 1. - max(float(eigenvalues.min()), 0.)))


def decompose_design(X, delta2: Optional[float] = None) -> DesignDecomposition:
    """
    Splits X^T X into scales and a correlation matrix; ``delta2=None`` applies
    the recommended rule
    """
    X = np.asarray(X, dtype=float)
    xtx = X.T @ X
    v = np.sqrt(np.diag(xtx))
    if np.any(v == 0.):
        raise DegenerateInputError(f'design has {int(np.sum(v == 0.))} all-zero columns')
    C = xtx / np.outer(v, v)
    C = .5 * (C + C.T)
    eta, U = np.linalg.eigh(C)
    eta, U = eta[::-1], U[:, ::-1]
    eta = np.where(eta < EIGEN_FLOOR, 0., eta)
    if delta2 is None:
        delta2 = choose_delta2(eta)
    if delta2 < 0:
        raise DomainError(f'delta2 must be non-negative, got {delta2}')
    shifted = eta + delta2
    if shifted.min() <= 0.:
        raise NotIdentifiableError('C + delta2 I is singular; use delta2 > 0 for rank deficient designs')
    inv = (U / shifted) @ U.T
    D = inv / np.outer(v, v)
    logger.debug('decomposed design p=%d, min eigenvalue %.3g, delta2 %.3g', v.size, eta[-1], delta2)
    return DesignDecomposition(
        xtx=xtx, v=v, C=C, eigenvalues=eta, eigenvectors=U, delta2=float(delta2), D=.5 * (D + D.T),
    )


def reciprocal_condition(xtx: np.ndarray) -> float:
    s = np.linalg.svd(xtx, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.


def ols_estimate(data: RegressionData) -> np.ndarray:
    """
    (X^T X)^-1 X^T y
    """
    if data.n < data.p:
        raise NotIdentifiableError(
            f'OLS is not identifiable with n={data.n} < p={data.p}; use the ridge statistic'
        )
    if reciprocal_condition(data.xtx) < OLS_RCOND:
        raise NotIdentifiableError('X^T X is numerically rank deficient; use the ridge statistic')
    try:
        return solve(data.xtx, data.xty, assume_a='pos')
    except LinAlgError as e:
        raise NotIdentifiableError('X^T X is not positive definite; use the ridge statistic') from e


def ridge_estimate(data: RegressionData, decomp: DesignDecomposition) -> np.ndarray:
    """
    V^-1 (C + delta2 I)^-1 V^-1 X^T y
    """
    return decomp.D @ data.xty


def _simulate_chunk(mapping: Optional[np.ndarray], p: int, size: int, seed: int, index: int,
                    scale: float) -> np.ndarray:
    rng = streams.substream(seed, streams.NULL_DRAWS, index)
    beta = rng.laplace(0., scale, size=(size, p))
    if mapping is not None:
        beta = beta @ mapping.T
    return psi_rows(beta)


def simulate_null(decomp: Optional[DesignDecomposition], p: int, mc_reps: int, seed: int,
                  scale: float = 1., workers: int = 1) -> NullDistribution:
    """
    Monte Carlo draws of psi(beta*) for i.i.d. Laplace beta* (``decomp=None``)
    or of psi(beta*_delta) for the ridge statistic. Chunks use their own
    substreams, so the draws do not depend on ``workers``.
    """
    if mc_reps < 1000:
        raise DomainError(f'mc_reps must be at least 1000, got {mc_reps}')
    if decomp is not None and decomp.p != p:
        raise DomainError(f'decomposition has p={decomp.p}, expected {p}')
    mapping = None if decomp is None else decomp.shrinkage
    sizes = [NULL_CHUNK] * (mc_reps // NULL_CHUNK)
    if mc_reps % NULL_CHUNK:
        sizes.append(mc_reps % NULL_CHUNK)

    def run(index):
        return _simulate_chunk(mapping, p, sizes[index], seed, index, scale)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, range(len(sizes))))
    else:
        chunks = [run(i) for i in range(len(sizes))]
    logger.info('simulated %d null statistics (p=%d, %s)', mc_reps, p, 'ols' if decomp is None else 'ridge')
    return NullDistribution(
        statistics=np.sort(np.concatenate(chunks)),
        kind=TestKind.ols if decomp is None else TestKind.ridge,
        p=p,
    )


def null_quantiles(decomp: Optional[DesignDecomposition], p: int, alpha: float, mc_reps: int, seed: int,
                   scale: float = 1., workers: int = 1) -> Tuple[float, float]:
    if not 0 < alpha < 1:
        raise DomainError(f'alpha must lie in (0, 1), got {alpha}')
    return simulate_null(decomp, p, mc_reps, seed, scale=scale, workers=workers).quantiles(alpha)


def select_statistic(data: RegressionData) -> Tuple[TestKind, DesignDecomposition, np.ndarray]:
    """
    OLS when n > p and X^T X is well conditioned, ridge with the recommended
    delta2 otherwise; returns the kind, the decomposition and the estimate
    """
    if data.n > data.p and reciprocal_condition(data.xtx) >= RIDGE_RCOND:
        decomp = decompose_design(data.X, delta2=0.)
        return TestKind.ols, decomp, ols_estimate(data)
    decomp = decompose_design(data.X)
    return TestKind.ridge, decomp, ridge_estimate(data, decomp)


def styan_bound(decomp: DesignDecomposition) -> float:
    """
    Upper bound on tr(Sigma_delta) / p from the column norms and the
    eigenvalues of C
    """
    col = float(np.max(1. / decomp.v ** 2))
    eta = decomp.eigenvalues
    if decomp.delta2 > 0:
        return col * float(np.max(eta / (eta + decomp.delta2) ** 2))
    if eta.min() <= 0:
        return float('inf')
    return col * float(np.max(1. / eta ** 2))


def _outcome(statistic: float, null: NullDistribution, alpha: float, kind: TestKind, n: int,
             decomp: Optional[DesignDecomposition] = None) -> TestOutcome:
    lower, upper = null.quantiles(alpha)
    return TestOutcome(
        statistic=statistic,
        lower_quantile=lower,
        upper_quantile=upper,
        reject=not (lower < statistic < upper),
        null_tail_prob=null.tail_prob(statistic),
        kind=kind,
        mc_reps=null.mc_reps,
        alpha=alpha,
        n=n,
        p=null.p,
        delta2=decomp.delta2 if decomp is not None else 0.,
        bound_surrogate=decomp.trace_bound if decomp is not None else None,
        styan_bound=styan_bound(decomp) if decomp is not None else None,
    )


def laplace_test(data: RegressionData, alpha: float, mc_reps: int, seed: int,
                 null: Optional[NullDistribution] = None, workers: int = 1,
                 check_standardized: bool = True) -> TestOutcome:
    """
    Level-alpha test of a Laplace prior for the coefficients. ``null`` may carry
    draws shared across datasets with the same statistic kind and p (and, for
    the ridge statistic, the same design). ``check_standardized=False`` skips
    the column norm warning for designs drawn by the caller.
    """
    if not 0 < alpha < 1:
        raise DomainError(f'alpha must lie in (0, 1), got {alpha}')
    if not np.any(data.y):
        raise DegenerateInputError('response is identically zero')
    if data.p < 2:
        raise DomainError('the kurtosis test needs p >= 2')
    if check_standardized:
        data.warn_if_not_standardized()

    kind, decomp, estimate = select_statistic(data)
    if null is None or null.kind != kind or null.p != data.p:
        null = simulate_null(None if kind == TestKind.ols else decomp, data.p, mc_reps, seed, workers=workers)
    outcome = _outcome(psi(estimate), null, alpha, kind, data.n, decomp)
    logger.info(
        '%s statistic %.4f, null band (%.4f, %.4f), reject=%s',
        kind.value, outcome.statistic, outcome.lower_quantile, outcome.upper_quantile, outcome.reject,
    )
    return outcome


def oracle_test(beta, alpha: float, null: NullDistribution, n: int = 0) -> TestOutcome:
    """
    The test applied to observed coefficients, against the i.i.d. Laplace null
    """
    if null.kind != TestKind.ols:
        raise DomainError('the oracle test uses the i.i.d. Laplace null')
    return _outcome(psi(beta), null, alpha, TestKind.oracle, n)


def bias_constants(decomp: DesignDecomposition) -> BiasConstants:
    """
    Design constants relating the kurtosis of beta_delta to that of beta
    """
    p = decomp.p
    xtx, D = decomp.xtx, decomp.D
    A = xtx @ D @ D @ xtx
    M = decomp.shrinkage
    alpha = float(np.trace(A) / p)
    gamma_const = float(np.sum(M ** 4) / p)
    omega = float(3. * (np.sum(np.diag(A) ** 2) / p - gamma_const))
    return BiasConstants(alpha=alpha, gamma_const=gamma_const, omega=omega)


def corrected_kurtosis(statistic: float, constants: BiasConstants) -> float:
    """
    (alpha^2 / gamma) (statistic - omega / alpha^2)
    """
    if constants.gamma_const <= 0:
        raise DomainError(f'gamma constant must be positive, got {constants.gamma_const}')
    a2 = constants.alpha ** 2
    return a2 / constants.gamma_const * (statistic - constants.omega / a2)


def proposition_bound(data: Optional[RegressionData], decomp: Optional[DesignDecomposition], beta_ref,
                      sigma2: float) -> float:
    """
    Leading term 16 sigma2 m6(b) / m2(b)^4 tr(Sigma_delta) / p with
    b = E[beta_delta | beta_ref]; the OLS form when delta2 = 0
    """
    if decomp is None:
        decomp = decompose_design(data.X, delta2=0.)
    beta_ref = np.asarray(beta_ref, dtype=float)
    b = beta_ref if decomp.delta2 == 0. else decomp.shrinkage @ beta_ref
    m2 = _empirical_moment(b, 2)
    if m2 == 0.:
        raise DegenerateInputError('reference coefficients have zero second moment')
    return 16. * sigma2 * _empirical_moment(b, 6) / m2 ** 4 * decomp.trace_bound
