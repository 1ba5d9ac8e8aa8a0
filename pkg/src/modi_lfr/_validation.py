"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DegenerateDataError, DomainError

MIN_FIT_SIZE = 5


def as_float_array(x):
    return np.asarray(x, dtype=float)


def check_sample(X, min_n: int = MIN_FIT_SIZE) -> np.ndarray:
    """Return lifetimes as a 1-D float array.

    Accepts a 1-D sequence or a single-column 2-D array (the layout sklearn
    pipelines hand to ``fit``). Raises :class:`DegenerateDataError` when the
    sample is too small or has no spread, and :class:`ValueError` for
    non-positive or non-finite observations.
    """
    arr = np.asarray(X, dtype=float)
    if arr.size == 0:
        raise DegenerateDataError("degenerate data: empty sample")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single feature column, got shape {arr.shape}")
        arr = check_array(arr, ensure_2d=True, dtype=float)[:, 0]
    elif arr.ndim != 1:
        raise ValueError(f"expected 1-D lifetimes, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("observations must be finite")
    if np.any(arr <= 0):
        raise ValueError("observations must be strictly positive lifetimes")
    if arr.size < min_n:
        raise DegenerateDataError(f"degenerate data: need at least {min_n} observations, got {arr.size}")
    if min_n > 1 and np.all(arr == arr[0]):
        raise DegenerateDataError("degenerate data: all observations are equal")
    return arr


def check_unit_interval(u, *, open_left: bool = False, name: str = "u") -> np.ndarray:
    """Validate probabilities for quantile functions: ``[0, 1)`` or ``(0, 1)``."""
    u = np.asarray(u, dtype=float)
    bad = (u >= 1) | ~np.isfinite(u)
    bad |= (u <= 0) if open_left else (u < 0)
    if np.any(bad):
        lo = "(0" if open_left else "[0"
        raise DomainError(f"{name} must lie in {lo}, 1)")
    return u
