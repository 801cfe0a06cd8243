"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_float_array(x, name: str, shape: tuple | None = None) -> np.ndarray:
    """Coerce to a float64 ndarray, optionally checking an exact shape.

    Shape entries of -1 match any size.
    """
    arr = np.asarray(x, dtype=np.float64)
    if shape is not None:
        if arr.ndim != len(shape):
            raise ValueError(f"{name}: expected {len(shape)}-d array, got shape {arr.shape}")
        for want, got in zip(shape, arr.shape):
            if want != -1 and want != got:
                raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def as_vec3(x, name: str = "vector") -> np.ndarray:
    v = as_float_array(x, name, (3,))
    check_finite(v, name)
    return v


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name}: must be positive, got {value!r}")
    return value
