"""Input validation helpers shared by the estimator API."""

from __future__ import annotations

import numpy as np

from .distributions import DomainError


def check_sample(X, name: str = "X", min_len: int = 1) -> np.ndarray:
    """Coerce a sample to a 1-D float array.

    Accepts shape (n,) or a single column (n, 1); anything wider is rejected
    rather than silently flattened.
    """
    a = np.asarray(X, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise DomainError(f"{name} must be 1-D or a single column, "
                          f"got shape {a.shape}")
    if a.size < min_len:
        raise DomainError(f"{name} needs at least {min_len} values, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite values")
    return a


def check_return_periods(T, name: str = "T") -> np.ndarray:
    """Return periods as a 1-D float array, all > 1 year."""
    a = np.asarray(T, dtype=float)
    if a.ndim == 0:
        a = a[None]
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise DomainError(f"{name} must be scalar, 1-D, or a single column, "
                          f"got shape {a.shape}")
    if a.size == 0 or not np.all(np.isfinite(a)) or np.any(a <= 1.0):
        raise DomainError(f"{name} must contain finite return periods > 1 year")
    return a


def check_positive(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    if not np.isfinite(v) or v <= 0.0:
        raise DomainError(f"{name} must be a positive finite number, got {value}")
    return v
