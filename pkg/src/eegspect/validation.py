"""Small input-validation helpers shared across the package.

Every helper raises ``ValueError`` with the offending argument named, so
callers can surface precise diagnostics without repeating boilerplate.
"""

from __future__ import annotations

import numpy as np


def as_float_vector(x, name: str) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array or raise."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_matrix(x, name: str) -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float64 array or raise."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name: str):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_in_range(value, low, high, name: str):
    """Require ``low < value < high`` (both ends strict)."""
    if not (low < value < high):
        raise ValueError(f"{name} must lie in ({low}, {high}), got {value!r}")
    return value
