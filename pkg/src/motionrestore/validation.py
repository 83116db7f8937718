"""Input validation helpers used by every module and by the estimator layer."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, ValidationError


def as_float_array(x, name: str = "array", shape: tuple | None = None) -> np.ndarray:
    """Coerce to a float64 ndarray, optionally enforcing a shape.

    ``shape`` entries of -1 match any extent.  Raises :class:`ShapeError` on
    mismatch and :class:`ValidationError` on non-finite entries.
    """
    arr = np.asarray(x, dtype=np.float64)
    if shape is not None:
        if arr.ndim != len(shape):
            raise ShapeError(f"{name}: expected {len(shape)} dims, got shape {arr.shape}")
        for want, got in zip(shape, arr.shape):
            if want != -1 and want != got:
                raise ShapeError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: contains non-finite values")
    return arr


def check_finite(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: contains non-finite values")
    return arr


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return float(value)


def check_non_negative(value: float, name: str) -> float:
    if value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_in_range(value: float, lo: float, hi: float, name: str) -> float:
    if not (lo <= value <= hi):
        raise ValidationError(f"{name} must lie in [{lo}, {hi}], got {value}")
    return float(value)
