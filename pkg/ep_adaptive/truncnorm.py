"""
Univariate normal draws restricted to an interval, by inverting the CDF.
Intervals lying in a tail are handled on the log scale, upper tails by
reflection.
"""
from math import erfc, exp, inf, log1p, sqrt

from numpy.random import Generator
from scipy.special import log_ndtr, ndtri, ndtri_exp

from ep_adaptive.errors import DomainError

_SQRT_HALF = sqrt(.5)


def _ndtr(x: float) -> float:
    return .5 * erfc(-x * _SQRT_HALF)


def standard_truncated(lo: float, hi: float, u: float) -> float:
    """
    Standard normal restricted to [lo, hi] at uniform ``u``
    """
    if lo > 0.:
        return -standard_truncated(-hi, -lo, 1. - u)
    if hi <= 0.:
        # log Phi(x) = log Phi(hi) + log(r + u (1 - r)), r = Phi(lo) / Phi(hi)
        log_hi = float(log_ndtr(hi))
        ratio = exp(float(log_ndtr(lo)) - log_hi) if lo > -inf else 0.
        return float(ndtri_exp(log_hi + log1p(-(1. - u) * (1. - ratio))))
    p_lo, p_hi = _ndtr(lo), _ndtr(hi)
    return float(ndtri(p_lo + u * (p_hi - p_lo)))


def truncated_normal(mean: float, sd: float, lower: float, upper: float, rng: Generator) -> float:
    """
    One draw of N(mean, sd^2) restricted to [lower, upper]
    """
    if not lower <= upper:
        raise DomainError(f'empty interval [{lower}, {upper}]')
    if sd <= 0.:
        raise DomainError(f'sd must be positive, got {sd}')
    if lower == upper:
        return lower
    x = mean + sd * standard_truncated((lower - mean) / sd, (upper - mean) / sd, rng.random())
    return min(max(x, lower), upper)
