"""Input validation helpers shared by the solvers and estimators."""

from __future__ import annotations

import numpy as np


class GridMismatchError(ValueError):
    """Two objects that must live on the same lattice do not."""


def check_finite(arr, what: str = "array") -> np.ndarray:
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def check_same_grid(a, b) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def check_time_grid(tgrid, start: float | None = None, uniform: bool = False,
                    rtol: float = 1e-6) -> np.ndarray:
    """Validate a strictly increasing time grid.

    ``start`` pins the first sample, ``uniform`` requires equal spacing
    to relative tolerance ``rtol``.
    """
    t = np.asarray(tgrid, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("time grid is empty")
    check_finite(t, "time grid")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if start is not None and t[0] != start:
        raise ValueError(f"time grid must start at {start}, got {t[0]}")
    if uniform and t.size > 2:
        d = np.diff(t)
        if np.max(np.abs(d - d.mean())) > rtol * d.mean():
            raise ValueError("time grid must be uniform")
    return t


def check_positive(value: float, name: str, allow_zero: bool = False) -> float:
    if allow_zero:
        if not value >= 0:
            raise ValueError(f"{name} must be nonnegative, got {value}")
    elif not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def as_field_array(x, grid) -> np.ndarray:
    """Coerce a Field or raw array to a float array of ``grid.shape``."""
    samples = getattr(x, "samples", x)
    field_grid = getattr(x, "grid", None)
    if field_grid is not None:
        check_same_grid(field_grid, grid)
    arr = np.asarray(samples, dtype=float)
    if arr.size != np.prod(grid.shape):
        raise ValueError(f"expected {np.prod(grid.shape)} samples, got {arr.size}")
    return check_finite(arr.reshape(grid.shape), "field samples")
