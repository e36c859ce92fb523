import logging
import warnings
from functools import cached_property
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from ep_adaptive.arrays import FROZEN_ARRAYS, FloatArray
from ep_adaptive.errors import DegenerateInputError

logger = logging.getLogger(__name__)

# standardized columns have squared norm n
STANDARDIZATION_TOLERANCE = .01


class RegressionData(BaseModel):
    """
    Response ``y`` (length n) and design ``X`` (n x p) with the metadata needed
    to undo standardization
    """
    model_config = FROZEN_ARRAYS

    y: FloatArray
    X: FloatArray
    standardized: bool = False
    column_means: Optional[FloatArray] = None
    column_scales: Optional[FloatArray] = None
    response_mean: float = 0.
    response_scale: float = 1.
    names: Tuple[str, ...] = ()

    @model_validator(mode='after')
    def _check_shapes(self):
        if self.X.ndim != 2:
            raise ValueError(f'X must be a matrix, got shape {self.X.shape}')
        n, p = self.X.shape
        if self.y.shape != (n,):
            raise ValueError(f'y has shape {self.y.shape}, expected ({n},)')
        if n < 2 or p < 1:
            raise ValueError(f'need n >= 2 and p >= 1, got n={n}, p={p}')
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError('data contain non-finite values')
        if self.names and len(self.names) != p:
            raise ValueError(f'{len(self.names)} column names for {p} columns')
        return self

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def column_names(self) -> Tuple[str, ...]:
        return self.names or tuple(f'x{j + 1}' for j in range(self.p))

    @cached_property
    def xtx(self) -> np.ndarray:
        return self.X.T @ self.X

    @cached_property
    def xty(self) -> np.ndarray:
        return self.X.T @ self.y

    @cached_property
    def column_sq_norms(self) -> np.ndarray:
        return np.einsum('ij,ij->j', self.X, self.X)

    def looks_standardized(self, tolerance: float = STANDARDIZATION_TOLERANCE) -> bool:
        return bool(np.all(np.abs(self.column_sq_norms - self.n) <= tolerance * self.n))

    def warn_if_not_standardized(self):
        if not self.looks_standardized():
            msg = (
                'columns of X do not have squared norm n (within 1%); '
                'the test assumes standardized data'
            )
            logger.warning(msg)
            warnings.warn(msg, stacklevel=3)

    def with_response(self, y) -> 'RegressionData':
        fields = {k: getattr(self, k) for k in type(self).model_fields}
        fields['y'] = y
        return RegressionData(**fields)

    def permuted(self, order: Sequence[int]) -> 'RegressionData':
        order = list(order)
        names = tuple(self.names[j] for j in order) if self.names else ()
        return RegressionData(y=self.y, X=self.X[:, order], names=names)


def standardize(data: RegressionData) -> RegressionData:
    """
    Centers y and the columns of X, scales the columns to squared norm n and y
    to unit (population) standard deviation
    """
    X, y = data.X, data.y
    means = X.mean(axis=0)
    centered = X - means
    scales = np.sqrt(np.mean(centered ** 2, axis=0))
    constant = np.flatnonzero(scales <= 1e-12 * np.maximum(1., np.abs(means)))
    if constant.size:
        cols = ', '.join(data.column_names[j] for j in constant[:5])
        raise DegenerateInputError(f'constant columns cannot be standardized: {cols}')

    y_mean = float(y.mean())
    y_scale = float(np.sqrt(np.mean((y - y_mean) ** 2)))
    if y_scale == 0.:
        raise DegenerateInputError('response is constant')

    return RegressionData(
        y=(y - y_mean) / y_scale,
        X=centered / scales,
        standardized=True,
        column_means=means,
        column_scales=scales,
        response_mean=y_mean,
        response_scale=y_scale,
        names=data.names,
    )


def remove_group_means(data: RegressionData, groups: Sequence) -> RegressionData:
    """
    Subtracts the overall mean and group-specific means from y and every column
    of X
    """
    groups = np.asarray(groups)
    if groups.shape != (data.n,):
        raise ValueError(f'need one group label per row, got {groups.shape}')
    _, labels = np.unique(groups, return_inverse=True)
    counts = np.bincount(labels)

    def demean(a):
        sums = np.zeros((counts.size,) + a.shape[1:])
        np.add.at(sums, labels, a)
        return a - (sums / counts.reshape((-1,) + (1,) * (a.ndim - 1)))[labels]

    logger.info('removed means of %d groups', counts.size)
    return RegressionData(y=demean(data.y), X=demean(data.X), names=data.names)


def expand_interactions(data: RegressionData) -> RegressionData:
    """
    Appends all pairwise products of columns and the squares of columns with
    more than two distinct values
    """
    names = data.column_names
    cols = [data.X[:, j] for j in range(data.p)]
    out_names = list(names)
    for j, k in combinations(range(data.p), 2):
        cols.append(data.X[:, j] * data.X[:, k])
        out_names.append(f'{names[j]}:{names[k]}')
    for j in range(data.p):
        if np.unique(data.X[:, j]).size > 2:
            cols.append(data.X[:, j] ** 2)
            out_names.append(f'{names[j]}^2')
    return RegressionData(y=data.y, X=np.column_stack(cols), names=tuple(out_names))
