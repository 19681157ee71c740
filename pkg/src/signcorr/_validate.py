from __future__ import annotations

import numpy as np

from .errors import DomainError


def as_data(data, p: int | None = None, min_n: int = 2) -> np.ndarray:
    """Return ``data`` as a C-contiguous float64 (n, p) array or raise."""
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DomainError(f"data must be a 2-d array, got {x.ndim} dimensions")
    n, q = x.shape
    if p is not None and q != p:
        raise DomainError(f"expected {p} columns, got {q}")
    if q < 1:
        raise DomainError("data has no columns")
    if n < min_n:
        raise DomainError(f"need at least {min_n} observations, got {n}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    return x


def as_vector(x, min_n: int = 1) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if v.size < min_n:
        raise DomainError(f"need at least {min_n} values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise DomainError("non-finite values")
    return v
