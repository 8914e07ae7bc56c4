"""Small input-validation helpers used across the package."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import LengthMismatch, NonFiniteFeature


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Return ``x`` as a 1-D float64 array, rejecting higher ranks."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def check_feature_matrix(X, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite 2-D float64 matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature(f"{name} contains NaN or infinity")
    return X


def check_same_length(a: Sequence, b: Sequence, what: str = "inputs") -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{what} disagree in length: {len(a)} vs {len(b)}")


def check_positive(value: float, name: str) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
