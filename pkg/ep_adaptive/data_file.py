"""
CSV ingestion: a combined file with a named response column, or separate
response and design files.
"""
import logging
import re
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ep_adaptive.data import RegressionData, expand_interactions, remove_group_means, standardize
from ep_adaptive.errors import DataParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_PARSER_LINE = re.compile(r'line (\d+)')


def _looks_numeric(cell) -> bool:
    try:
        float(cell)
    except (TypeError, ValueError):
        return False
    return True


def _read_cells(path: PathLike, header: Optional[bool]) -> Tuple[pd.DataFrame, int]:
    """
    Reads every cell as text. ``header=None`` detects a header row by the
    presence of a non-numeric cell in the first line. Also returns the file
    line number of the first data row.
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True,
                            encoding='utf-8')
    except pd.errors.ParserError as e:
        m = _PARSER_LINE.search(str(e))
        raise DataParseError(f'ragged CSV in {path}', row=int(m.group(1)) if m else None) from e
    except pd.errors.EmptyDataError as e:
        raise DataParseError(f'{path} is empty') from e

    if header is None:
        header = not all(_looks_numeric(c) for c in frame.iloc[0] if isinstance(c, str))
    if header:
        names = [str(c).strip() for c in frame.iloc[0]]
        frame = frame.iloc[1:].reset_index(drop=True)
        frame.columns = names
        return frame, 2
    frame.columns = [f'x{j + 1}' for j in range(frame.shape[1])]
    return frame, 1


def _numeric(frame: pd.DataFrame, path: PathLike, first_line: int) -> np.ndarray:
    values = np.empty(frame.shape, dtype=float)
    for j, name in enumerate(frame.columns):
        column = frame.iloc[:, j]
        missing = column.isna().to_numpy()
        if missing.any():
            raise DataParseError(f'missing field in {path}', row=first_line + int(np.argmax(missing)), column=name)
        converted = pd.to_numeric(column, errors='coerce').to_numpy(dtype=float)
        bad = ~np.isfinite(converted)
        if bad.any():
            i = int(np.argmax(bad))
            raise DataParseError(f'non-numeric or non-finite cell {column.iloc[i]!r} in {path}',
                                 row=first_line + i, column=name)
        values[:, j] = converted
    return values


def load_csv(path: Optional[PathLike] = None, response: str = 'y', y_path: Optional[PathLike] = None,
             x_path: Optional[PathLike] = None, group_column: Optional[str] = None, interactions: bool = False,
             standardize_data: bool = False) -> RegressionData:
    """
    Loads ``path`` (header required, response in column ``response``) or the
    pair ``y_path``/``x_path``. Group means are removed before interactions are
    formed, and standardization comes last.
    """
    groups = None
    if path is not None:
        frame, first = _read_cells(path, header=True)
        if response not in frame.columns:
            raise DataParseError(f'response column {response!r} not found in {path}', column=response)
        if group_column is not None:
            if group_column not in frame.columns:
                raise DataParseError(f'group column {group_column!r} not found in {path}', column=group_column)
            groups = frame.pop(group_column).to_numpy()
        y_frame = frame[[response]]
        x_frame = frame.drop(columns=[response])
        y = _numeric(y_frame, path, first)[:, 0]
        X = _numeric(x_frame, path, first)
        names: Tuple[str, ...] = tuple(x_frame.columns)
    elif y_path is not None and x_path is not None:
        y_frame, y_first = _read_cells(y_path, header=None)
        x_frame, x_first = _read_cells(x_path, header=None)
        if y_frame.shape[1] != 1:
            raise DataParseError(f'{y_path} must have a single column, found {y_frame.shape[1]}')
        if y_frame.shape[0] != x_frame.shape[0]:
            raise DataParseError(f'{y_path} has {y_frame.shape[0]} rows but {x_path} has {x_frame.shape[0]}')
        y = _numeric(y_frame, y_path, y_first)[:, 0]
        X = _numeric(x_frame, x_path, x_first)
        names = tuple(x_frame.columns)
    else:
        raise ValueError('give either a combined CSV path or both y_path and x_path')

    if X.shape[0] < 2:
        raise DataParseError(f'need at least 2 data rows, found {X.shape[0]}')
    if X.shape[1] < 1:
        raise DataParseError('no covariate columns found')

    data = RegressionData(y=y, X=X, names=names)
    logger.info('loaded n=%d, p=%d', data.n, data.p)
    if groups is not None:
        data = remove_group_means(data, groups)
    if interactions:
        data = expand_interactions(data)
    if standardize_data:
        data = standardize(data)
    return data
