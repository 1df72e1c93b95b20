"""Input checks shared by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_series(X):
    """Validate a univariate series given as shape ``(t,)`` or ``(t, 1)``.

    NaN marks a missing point; infinities are rejected. Returns the flat
    float array and the original shape.
    """
    arr = np.asarray(X)
    shape = arr.shape
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, dtype=np.float64, ensure_all_finite="allow-nan", copy=True)
    if arr.shape[1] != 1:
        raise ValueError(f"expected a univariate series, got {arr.shape[1]} columns")
    return arr[:, 0], shape


def restore_shape(values: np.ndarray, shape) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(shape)
