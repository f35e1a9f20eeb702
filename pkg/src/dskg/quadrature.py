"""Composite Simpson rules on uniform grids.

Both the running integral and the fixed-endpoint weights use the same
construction, so a quadrature over ``[0, t_m]`` computed either way sees
identical weights on every sample:

* an even number of intervals uses plain composite Simpson;
* an odd number ``m >= 3`` uses Simpson on the first ``m - 3`` intervals
  and the 3/8 rule on the last three;
* a single interval uses the three-point formula ``h (5 f0 + 8 f1 - f2) / 12``
  when a third sample exists, otherwise the trapezoid.
"""

from __future__ import annotations

import numpy as np


def simpson_weights(m: int, h: float, n_available: int | None = None) -> np.ndarray:
    """Weights for ``int_0^{t_m}`` on ``m`` uniform intervals of width ``h``.

    The returned array has length ``m + 1`` except for ``m == 1`` with a
    third sample available, where it has length 3.
    """
    if m < 0:
        raise ValueError("number of intervals must be nonnegative")
    if m == 0:
        return np.zeros(1)
    if m == 1:
        if n_available is None or n_available >= 3:
            return h * np.array([5.0, 8.0, -1.0]) / 12.0
        return h * np.array([0.5, 0.5])
    w = np.zeros(m + 1)
    even = m if m % 2 == 0 else m - 3
    if even > 0:
        w[0:even + 1:2] += 2.0
        w[1:even:2] += 4.0
        w[0] -= 1.0
        w[even] -= 1.0
        w[: even + 1] *= h / 3.0
    if m % 2 == 1:
        w[even:even + 4] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def simpson(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Integral over the whole sampled range along ``axis``."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    m = f.shape[0] - 1
    w = simpson_weights(m, h, n_available=f.shape[0])
    return np.tensordot(w, f[: w.size], axes=(0, 0))


def cumulative_simpson(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Running integrals ``int_0^{t_j} f`` for every sample ``j`` along ``axis``."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    out = np.zeros(f.shape, dtype=np.result_type(f.dtype, float))
    if n == 1:
        return np.moveaxis(out, 0, axis)
    if n == 2:
        out[1] = 0.5 * h * (f[0] + f[1])
        return np.moveaxis(out, 0, axis)
    out[1] = h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0
    # even indices: accumulate Simpson panels
    if n > 2:
        panels = h / 3.0 * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
        out[2::2] = np.cumsum(panels, axis=0)[: out[2::2].shape[0]]
    # odd indices >= 3: Simpson up to j-3 then the 3/8 rule
    if n > 3:
        j = np.arange(3, n, 2)
        tail = 3.0 * h / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j])
        out[3::2] = out[j - 3] + tail
    return np.moveaxis(out, 0, axis)
