"""Input validation helpers shared by the estimators and the functional API."""
from __future__ import annotations

import numbers

import numpy as np

MAX_ORDER = 2**16


def check_order(order) -> int:
    if isinstance(order, bool) or not isinstance(order, numbers.Integral):
        raise ValueError(f"Hadamard order must be an integer, got {order!r}")
    order = int(order)
    if order < 1 or order > MAX_ORDER or order & (order - 1):
        raise ValueError(
            f"Hadamard order must be a power of two in [1, {MAX_ORDER}], got {order}"
        )
    return order


def check_bits(bits, n_cols: int | None = None, name: str = "bits") -> np.ndarray:
    """Return ``bits`` as an int8 array after checking it is binary."""
    arr = np.asarray(bits)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    if n_cols is not None:
        arr = arr.reshape(-1, n_cols) if arr.ndim == 1 and arr.size % n_cols == 0 else arr
        if arr.ndim != 2 or arr.shape[1] != n_cols:
            raise ValueError(f"{name} must have {n_cols} columns, got shape {arr.shape}")
    return arr.astype(np.int8)


def check_alphas(alphas, tol: float = 1e-12) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("alphas must be a non-empty 1-D sequence")
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError(f"every alpha must lie in [0, 1], got {a.tolist()}")
    if abs(a.sum() - 1.0) > tol:
        raise ValueError(f"alphas must sum to 1, got {a.sum()!r}")
    if np.any(a == 0):
        raise ValueError(f"every alpha must be positive (a zero share leaves an empty layer), got {a.tolist()}")
    if np.any(np.diff(a) >= 0):
        raise ValueError(f"alphas must be strictly decreasing, got {a.tolist()}")
    return a


def check_nonzero(value, name: str) -> complex:
    v = complex(value)
    if v == 0:
        raise ValueError(f"{name} must be nonzero")
    return v


def check_unit_interval(value, name: str) -> float:
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return v


def check_positive(value, name: str) -> float:
    v = float(value)
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")
    return v
