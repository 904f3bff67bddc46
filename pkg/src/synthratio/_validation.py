"""Small input-validation helpers used across the estimators."""

import numpy as np

from .errors import InputError


def as_matrix(X, name="X"):
    """Coerce to a 2-D float64 array, accepting 1-D input as a single column."""
    if hasattr(X, "data") and hasattr(X, "column_names"):  # FeatureMatrix
        X = X.data
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 1-D or 2-D array, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def as_vector(x, name="x"):
    """Coerce to a 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be 1-D, got ndim={arr.ndim}")
    return arr


def check_same_columns(A, B, names=("A", "B")):
    if A.shape[1] != B.shape[1]:
        raise InputError(
            f"{names[0]} and {names[1]} must have the same number of columns "
            f"({A.shape[1]} vs {B.shape[1]})"
        )


def check_positive(value, name):
    if not value > 0:
        raise InputError(f"{name} must be positive, got {value!r}")
