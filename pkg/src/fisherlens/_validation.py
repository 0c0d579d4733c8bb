"""Input checks shared by the estimator API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_outcome_array(X) -> tuple[np.ndarray, np.ndarray]:
    """Split an ``(m, 2)`` array of ``[branch, x]`` rows into typed columns."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"outcomes need 2 columns [branch, x], got {X.shape[1]}")
    branch = X[:, 0]
    if not np.all((branch == 1.0) | (branch == 2.0)):
        raise ValueError("branch column must contain only 1 and 2")
    return branch.astype(np.int8), X[:, 1].copy()


def check_window(window, sigma: float) -> tuple[float, float]:
    if window is None:
        return 0.0, 6.0 * sigma
    lo, hi = (float(v) for v in window)
    if not (0.0 <= lo < hi and np.isfinite(hi)):
        raise ValueError(f"window must satisfy 0 <= lo < hi, got {window!r}")
    return lo, hi


def check_count(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
