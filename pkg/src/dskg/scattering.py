"""Asymptotic free data and the deviation of a solution from its free limit.

Because the Duhamel kernel is separable,

    u(t) = rho0(t) [u0 + c^2 int_0^t rho1 h] + rho1(t) [u1 - c^2 int_0^t rho0 h],

so the bracketed terms evaluated at ``t = infinity`` are the data of the
free solution ``u_+`` that ``u`` approaches.  The infinite integrals are
truncated at ``t_cut`` and the neglected part is estimated from the decay
rate of ``||h(s)||`` measured on the end of the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nonlinearity import h_array
from .propagator import FieldSeries, ModeTable
from .quadrature import cumulative_simpson, simpson_weights
from .spectral import Field, irfft, rfft, sobolev_norms_batch


class ScatteringError(RuntimeError):
    """The neglected tail of the scattering integrals exceeds the tolerance."""


@dataclass(eq=False)
class AsymptoticState:
    u_plus0: Field
    u_plus1: Field
    tail_times: np.ndarray
    tail_values: np.ndarray
    t_cut: float
    decay_rate: float
    tail_estimate: float
    Q: float
    c: float
    H: float

    def tail_bound(self, t: float) -> float:
        """``c^-1 int_t^infinity ||h(s)|| ds`` from the table plus the extrapolated end."""
        return float(np.interp(t, self.tail_times, self.tail_values))


def _fit_rate(times: np.ndarray, norms: np.ndarray, fraction: float = 0.25) -> float:
    """Exponential decay rate of the last ``fraction`` of a positive series."""
    k = max(3, int(fraction * times.size))
    tt, vv = times[-k:], norms[-k:]
    if vv[-1] == 0:
        return math.inf
    if np.any(vv <= 0):
        return math.nan
    slope = np.polyfit(tt, np.log(vv), 1)[0]
    return float(-slope)


def compute_asymptotic_state(traj, params, derived, t_cut: float | None = None,
                             tail_tol: float = 1e-6, mu: float = 0.0,
                             forcing: FieldSeries | None = None,
                             Q: float | None = None, dealias: bool = True) -> AsymptoticState:
    """Scattering data ``(u_+0, u_+1)`` of a trajectory.

    ``forcing`` overrides the source ``h(u)`` computed from the trajectory
    and must share its time grid.  The neglected tail
    ``c^-1 int_{t_cut}^infinity ||h||_{H^mu}`` is extrapolated with the
    fitted exponential rate; a value above ``tail_tol`` raises
    :class:`ScatteringError`.
    """
    grid = traj.grid
    times = traj.times
    Q = derived.Q if Q is None else Q
    c = params.c
    if forcing is None:
        h = h_array(traj.u, times, params, derived, grid, dealias)
    else:
        if forcing.times.size != times.size or not np.allclose(forcing.times, times,
                                                               rtol=0, atol=1e-12):
            raise ValueError("forcing must be sampled on the trajectory times")
        h = forcing.values
    if t_cut is None:
        t_cut = float(times[-1])
    j = int(np.searchsorted(times, t_cut - 1e-12 * max(1.0, t_cut)))
    if j >= times.size or abs(times[j] - t_cut) > 1e-9 * max(1.0, t_cut):
        raise ValueError(f"t_cut = {t_cut} is not a trajectory sample")

    dt = float(times[1] - times[0])
    hh = rfft(h, grid)
    norms = sobolev_norms_batch(hh, grid, mu, kind="inhomogeneous")
    u0, u1 = traj.u[0], traj.ut[0]
    if not np.any(hh[: j + 1]):
        corr0 = corr1 = np.zeros(grid.shape)
    else:
        table = ModeTable(grid, times[: max(j + 1, min(3, times.size))], c, params.H, Q)
        R = table.full()
        w = simpson_weights(j, dt, n_available=R.shape[1])
        I0 = np.tensordot(w, R[0, : w.size] * hh[: w.size], axes=(0, 0))
        I1 = np.tensordot(w, R[1, : w.size] * hh[: w.size], axes=(0, 0))
        corr0 = irfft(c**2 * I1, grid)
        corr1 = irfft(-(c**2) * I0, grid)

    seg = norms[: j + 1]
    if not np.any(seg):
        rate, tail_end = math.inf, 0.0
    else:
        rate = _fit_rate(times[: j + 1], seg)
        tail_end = seg[-1] / rate / c if rate > 0 else math.inf
    if not tail_end <= tail_tol:
        raise ScatteringError(
            f"neglected tail {tail_end:.3g} exceeds tolerance {tail_tol:.3g} "
            f"(fitted decay rate {rate:.3g})")
    running = cumulative_simpson(seg, dt) / c
    tail_table = running[-1] - running + tail_end
    return AsymptoticState(Field(grid, u0 + corr0), Field(grid, u1 + corr1),
                           times[: j + 1].copy(), tail_table, float(times[j]), rate,
                           tail_end, Q, c, params.H)


def free_limit(ast: AsymptoticState, times) -> tuple[np.ndarray, np.ndarray]:
    """``u_+(t) = K0(t) u_+0 + K1(t) u_+1`` and its time derivative on ``times``."""
    grid = ast.u_plus0.grid
    table = ModeTable(grid, times, ast.c, ast.H, ast.Q)
    R = table.full()
    a = rfft(ast.u_plus0.samples, grid)
    b = rfft(ast.u_plus1.samples, grid)
    return irfft(R[0] * a + R[1] * b, grid), irfft(R[2] * a + R[3] * b, grid)


def deviation_series(traj, ast: AsymptoticState, mu: float = 1.0,
                     kind: str = "inhomogeneous") -> tuple[np.ndarray, np.ndarray]:
    """``H^{mu-1}`` deviations of ``u`` and ``u_t`` from ``u_+`` at every trajectory time."""
    grid = traj.grid
    up, upt = free_limit(ast, traj.times)
    du = rfft(traj.u - up, grid)
    dut = rfft(traj.ut - upt, grid)
    return (sobolev_norms_batch(du, grid, mu - 1.0, kind),
            sobolev_norms_batch(dut, grid, mu - 1.0, kind))


def scattering_deviation(traj, ast: AsymptoticState, t: float, mu: float = 1.0) -> tuple[float, float]:
    """``(||u(t) - u_+(t)||_{H^{mu-1}}, ||d_t (u - u_+)(t)||_{H^{mu-1}})``."""
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    i = traj.index(t)
    dev_u, dev_ut = deviation_series(traj, ast, mu)
    return float(dev_u[i]), float(dev_ut[i])
