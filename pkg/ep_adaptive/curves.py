"""
Plot-ready tables of the exponential power family: densities, mode
thresholding functions and the kurtosis of the shape.
"""
from typing import Sequence

import numpy as np
import pandas as pd

from ep_adaptive.distributions import EpPrior, ep_density, ep_kurtosis
from ep_adaptive.solvers import mode_threshold

DEFAULT_SHAPES = (.25, .5, 1., 2., 4.)


def density_curves(qs: Sequence[float] = DEFAULT_SHAPES, tau2: float = 1., limit: float = 4.,
                   points: int = 401) -> pd.DataFrame:
    """Long format: q, beta, density"""
    beta = np.linspace(-limit, limit, points)
    frames = [
        pd.DataFrame({'q': q, 'beta': beta, 'density': ep_density(beta, EpPrior(tau2=tau2, q=q))})
        for q in qs
    ]
    return pd.concat(frames, ignore_index=True)


def threshold_curves(qs: Sequence[float] = DEFAULT_SHAPES, sigma2: float = 1., tau2: float = 1.,
                     limit: float = 4., points: int = 401) -> pd.DataFrame:
    """Long format: q, b_ols, mode"""
    b = np.linspace(-limit, limit, points)
    frames = []
    for q in qs:
        prior = EpPrior(tau2=tau2, q=q)
        frames.append(pd.DataFrame({'q': q, 'b_ols': b, 'mode': [mode_threshold(v, sigma2, prior) for v in b]}))
    return pd.concat(frames, ignore_index=True)


def kurtosis_curve(q_min: float = .1, q_max: float = 4., points: int = 400) -> pd.DataFrame:
    """q on a log grid against the kurtosis kappa + 3"""
    qs = np.geomspace(q_min, q_max, points)
    return pd.DataFrame({'q': qs, 'kurtosis': [ep_kurtosis(q) for q in qs]})
