"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import os
from numbers import Real

import numpy as np

from .henon import HenonComposition, HenonFactor, composition_from_dict, load_composition


def check_composition(X) -> HenonComposition:
    """Coerce ``X`` to a :class:`HenonComposition`.

    Accepts a composition, a single factor, parsed JSON (list of factors or
    ``{"factors": [...]}``) or a path to a JSON file.
    """
    if isinstance(X, HenonComposition):
        return X
    if isinstance(X, HenonFactor):
        return HenonComposition((X,))
    if isinstance(X, (str, os.PathLike)):
        return load_composition(X)
    if isinstance(X, (list, dict)):
        return composition_from_dict(X)
    raise TypeError(f"cannot interpret {type(X).__name__} as a Hénon composition")


def check_points(X) -> np.ndarray:
    """Return ``X`` as a complex array of shape ``(m, 2)`` holding ``(x, y)`` rows.

    A single point ``(x, y)`` is promoted to shape ``(1, 2)``. Non-finite values
    are rejected.
    """
    arr = np.asarray(X, dtype=complex)
    if arr.ndim == 1:
        if arr.shape[0] != 2:
            raise ValueError(f"a point needs 2 coordinates, got {arr.shape[0]}")
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an array of shape (m, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


def check_positive(name: str, value, integer: bool = False):
    if integer:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    if not isinstance(value, Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return float(value)
