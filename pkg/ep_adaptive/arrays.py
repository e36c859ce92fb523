from typing import Annotated

import numpy as np
from pydantic import BeforeValidator, ConfigDict, PlainSerializer


def _readonly_array(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_readonly_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]

FROZEN_ARRAYS = ConfigDict(frozen=True, arbitrary_types_allowed=True)
