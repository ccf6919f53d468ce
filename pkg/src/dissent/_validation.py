"""Input validation helpers shared by the domain types and estimators."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

SIMPLEX_ATOL = 1e-9
INGEST_ATOL = 1e-6


def check_unit_interval(value: float, name: str, *, open_low=False, open_high=False) -> float:
    """Return ``value`` as a float, raising ValueError unless it lies in [0, 1]."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a real number, got {value!r}") from None
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    low_ok = value > 0.0 if open_low else value >= 0.0
    high_ok = value < 1.0 if open_high else value <= 1.0
    if not (low_ok and high_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {value}")
    return value


def check_non_negative(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_non_negative_int(value: int, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def as_vector(values, name: str, *, min_length: int = 1) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_unit_vector(values, name: str) -> np.ndarray:
    """Like :func:`as_vector` but every entry must be in [0, 1]."""
    arr = as_vector(values, name)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return arr


def simplex_violations(weights: Sequence[float], atol: float = SIMPLEX_ATOL) -> list[str]:
    """Describe how ``weights`` fails to be a point on the probability simplex."""
    problems = []
    arr = np.asarray(weights, dtype=float)
    if arr.size == 0:
        return ["weight vector is empty"]
    if not np.all(np.isfinite(arr)):
        problems.append("weights contain non-finite values")
        return problems
    if np.any(arr < 0):
        problems.append(f"negative weight(s): min={arr.min():.6g}")
    total = float(arr.sum())
    if abs(total - 1.0) > atol:
        problems.append(f"weights sum to {total:.12g}, not 1 (tol {atol:g})")
    return problems


def check_same_length(a: Sequence, b: Sequence, what: str) -> None:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch in {what}: {len(a)} != {len(b)}")
