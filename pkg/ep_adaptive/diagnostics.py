"""
Effective sample size of a single Markov chain, by the initial positive and
initial monotone sequence estimators of the integrated autocorrelation time.
"""
import logging
import warnings
from typing import Tuple

import numpy as np

from ep_adaptive.errors import DomainError

logger = logging.getLogger(__name__)

MIN_CHAIN = 10


def autocovariance(chains: np.ndarray) -> np.ndarray:
    """
    Biased autocovariance of every column of ``chains`` (draws x series),
    computed by FFT with zero padding
    """
    n = chains.shape[0]
    centered = chains - chains.mean(axis=0)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centered, n=size, axis=0)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), n=size, axis=0)[:n] / n


def _ess_from_acov(acov: np.ndarray) -> float:
    n = acov.size
    var_plus = acov[0]
    rho = np.zeros(n)
    rho[0] = 1.
    rho_even = 1.
    rho_odd = acov[1] / var_plus
    rho[1] = rho_odd

    # initial positive sequence: keep pairs while their sum stays positive
    t = 1
    while t < n - 3 and rho_even + rho_odd > 0.:
        rho_even = acov[t + 1] / var_plus
        rho_odd = acov[t + 2] / var_plus
        if rho_even + rho_odd >= 0.:
            rho[t + 1] = rho_even
            rho[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_even > 0.:
        rho[max_t + 1] = rho_even

    # initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = rho[t + 2] = .5 * (rho[t - 1] + rho[t])
        t += 2

    tau = -1. + 2. * np.sum(rho[:max_t + 1]) + np.sum(rho[max_t + 1:max_t + 2])
    return float(min(n / tau, n)) if tau > 0 else float(n)


def effective_sample_size(chain) -> Tuple[float, bool]:
    """
    Returns ``(ess, degenerate)``; a constant chain gives its length with
    ``degenerate=True``
    """
    chain = np.asarray(chain, dtype=float)
    if chain.ndim != 1 or chain.size < MIN_CHAIN:
        raise DomainError(f'ESS needs a series of length >= {MIN_CHAIN}, got shape {chain.shape}')
    if not np.all(np.isfinite(chain)):
        raise DomainError('chain contains non-finite values')
    if np.ptp(chain) == 0.:
        return float(chain.size), True
    return _ess_from_acov(autocovariance(chain[:, None])[:, 0]), False


def ess_per_coordinate(draws: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    ESS of every column of ``draws``; returns the ESS vector and the
    degenerate-chain mask
    """
    draws = np.asarray(draws, dtype=float)
    n, p = draws.shape
    if n < MIN_CHAIN:
        raise DomainError(f'ESS needs at least {MIN_CHAIN} retained draws, got {n}')
    acov = autocovariance(draws)
    ess = np.full(p, float(n))
    degenerate = np.ptp(draws, axis=0) == 0.
    for j in np.flatnonzero(~degenerate):
        ess[j] = _ess_from_acov(acov[:, j])
    if degenerate.any():
        logger.warning('%d coordinates have constant chains', int(degenerate.sum()))
        warnings.warn('constant chains have no autocorrelation; ESS set to the chain length', stacklevel=2)
    return ess, degenerate
