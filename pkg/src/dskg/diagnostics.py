"""Energy densities, flux balance and their discrete residuals.

Two families of densities are provided, one for ``H >= 0`` and a
time-weighted one for ``H < 0``.  In both cases the balance law

    d/dt int e0 + int e_diss + int e_force = 0

is an identity for the linear equation with source ``h``, and the tilde
densities absorb the nonlinear source into the potential so that
``d/dt int e0~ + int e_diss~ = 0`` for the full shifted flow.  Gradient
terms are evaluated through Parseval so that they are consistent with the
spectral Laplacian used by the solvers.  Time integrals use the same
composite Simpson rule as the Duhamel quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nonlinearity import h_array
from .quadrature import cumulative_simpson
from .spectral import Grid, irfft, rfft, sobolev_norms_batch

REGIMES = ("H_nonneg", "H_neg")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e0_integral: float
    e0_tilde_integral: float
    dissipation_rate: float
    dissipation_accum: float
    flux_integral: float
    balance_residual: float


def _check_regime(regime: str, H: float) -> str:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if regime == "H_nonneg" and H < 0 or regime == "H_neg" and H >= 0:
        raise ValueError(f"regime {regime!r} does not match H = {H}")
    return regime


def _lattice(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return np.sum(values, axis=axes) * grid.weight


def _r0(params, derived) -> float:
    return 0.0 if derived.r0 is None else derived.r0


def _grad_sq(u: np.ndarray, grid: Grid) -> np.ndarray:
    return sobolev_norms_batch(rfft(u, grid), grid, 1.0) ** 2


def _flux_divergence(u: np.ndarray, ut: np.ndarray, params, grid: Grid) -> np.ndarray:
    """``int d_j e^j dx`` with the flux ``-u_t d_j u`` differentiated spectrally.

    Vanishes on the periodic box up to roundoff; kept as a check on the
    discretisation rather than as part of the balance.
    """
    uh = rfft(u, grid)
    total = 0.0
    for kj in grid.rk_components:
        flux = -ut * irfft(1j * kj * uh, grid)
        total = total + _lattice(irfft(1j * kj * rfft(flux, grid), grid), grid)
    return total


def densities(u: np.ndarray, ut: np.ndarray, t, params, derived, regime: str, grid: Grid):
    """Spatial integrals ``(e0, e0~, e_diss, e_diss~)`` for one or more snapshots.

    ``u`` and ``ut`` may carry a leading time axis matching ``t``.
    """
    H, c, n, lam = params.H, params.c, params.n, params.lam
    _check_regime(regime, H)
    r0 = _r0(params, derived)
    mass = params.mass_term
    fric = params.friction_term
    t = np.asarray(t, dtype=float)
    g2 = _grad_sq(u, grid)
    ut2 = _lattice(ut**2, grid)
    u2 = _lattice(u**2, grid)
    u3 = _lattice(u**3, grid)
    u4 = _lattice(u**4, grid)
    if regime == "H_nonneg":
        decay = np.exp(-2.0 * H * t)
        e0 = ut2 / (2 * c**2) - 0.5 * fric * u2 + mass * u2 + 0.5 * decay * g2
        ed = H * decay * g2
        w4 = np.exp(-n * H * t)
        w3 = np.exp(-n * H * t / 2.0)
        e0t = e0 + lam / 4.0 * w4 * u4 + lam * r0 * w3 * u3
        edt = ed + lam * n * H / 4.0 * w4 * u4 + lam * r0 * n * H / 2.0 * w3 * u3
    else:
        grow = np.exp(2.0 * H * t)
        e0 = (grow * ut2 / (2 * c**2) + 0.5 * g2 - 0.5 * grow * fric * u2
              + mass * grow * u2)
        ed = (-H * grow * ut2 / c**2 + fric * H * grow * u2
              - 2.0 * mass * H * grow * u2)
        w4 = np.exp(-(n - 2) * H * t)
        w3 = np.exp(-(n - 4) * H * t / 2.0)
        e0t = e0 + lam / 4.0 * w4 * u4 + lam * r0 * w3 * u3
        edt = (ed + lam * (n - 2) * H / 4.0 * w4 * u4
               + lam * r0 * (n - 4) * H / 2.0 * w3 * u3)
    return e0, e0t, ed, edt


def forcing_density(ut: np.ndarray, h: np.ndarray, t, params, regime: str, grid: Grid):
    """``int e_force dx``: ``u_t h`` for ``H >= 0``, ``e^{2Ht} u_t h`` otherwise."""
    _check_regime(regime, params.H)
    val = _lattice(ut * h, grid)
    if regime == "H_neg":
        val = val * np.exp(2.0 * params.H * np.asarray(t, dtype=float))
    return val


def energy_report(snapshot, params, derived, regime: str) -> EnergyReport:
    """Energy integrals of a single snapshot (no time accumulation)."""
    grid = snapshot.u.grid
    u, ut = snapshot.u.samples, snapshot.ut.samples
    e0, e0t, ed, edt = densities(u, ut, snapshot.t, params, derived, regime, grid)
    flux = _flux_divergence(u, ut, params, grid)
    return EnergyReport(float(snapshot.t), float(e0), float(e0t), float(edt), 0.0,
                        float(flux), 0.0)


def energy_history(traj, params, derived, regime: str, forcing=None) -> list[EnergyReport]:
    """Energy reports along a trajectory with accumulated dissipation.

    Without ``forcing`` the tilde balance of the nonlinear flow is used
    (for ``lam = 0`` it reduces to the plain one).  With ``forcing`` (a
    :class:`~dskg.propagator.FieldSeries` on the trajectory times) the
    plain balance of the forced linear equation is used.
    """
    grid = traj.grid
    t = traj.times
    e0, e0t, ed, edt = densities(traj.u, traj.ut, t, params, derived, regime, grid)
    dt = float(t[1] - t[0]) if t.size > 1 else 0.0
    if forcing is None:
        energy, rate = e0t, edt
    else:
        if forcing.times.size != t.size or np.max(np.abs(forcing.times - t)) > 1e-9 * max(1.0, t[-1]):
            raise ValueError("forcing must be sampled on the trajectory times")
        energy = e0
        rate = ed + forcing_density(traj.ut, forcing.values, t, params, regime, grid)
    accum = cumulative_simpson(rate, dt) if t.size > 1 else np.zeros(1)
    residual = energy + accum - energy[0]
    flux = _flux_divergence(traj.u, traj.ut, params, grid)
    return [EnergyReport(float(t[i]), float(e0[i]), float(e0t[i]), float(rate[i]),
                         float(accum[i]), float(flux[i]), float(residual[i]))
            for i in range(t.size)]


def energy_inequality_residual(traj, params, derived, regime: str, forcing=None,
                               relative: bool = False) -> float:
    """Largest balance residual along ``traj``.

    The underlying statement is an identity, so the result measures
    discretisation error only.  ``relative`` divides by ``1 + |E(0)|``.
    Requires ``Q >= 0``.
    """
    if derived.Q < 0:
        raise ValueError(f"energy balance needs Q >= 0, got {derived.Q}")
    reports = energy_history(traj, params, derived, regime, forcing)
    res = max(abs(r.balance_residual) for r in reports)
    if relative:
        e_init = reports[0].e0_integral if forcing is not None else reports[0].e0_tilde_integral
        res /= 1.0 + abs(e_init)
    return float(res)


def regime_for(H: float) -> str:
    return "H_nonneg" if H >= 0 else "H_neg"


def relative_drift(reports: list[EnergyReport]) -> float:
    """``max_t |E~(t) - E~(0)| / |E~(0)|`` for a conservative run."""
    e_init = reports[0].e0_tilde_integral
    drift = max(abs(r.e0_tilde_integral - e_init) for r in reports)
    return drift / abs(e_init) if e_init else math.inf if drift else 0.0


def forcing_from_trajectory(traj, params, derived, dealias: bool = True):
    """Nonlinear source ``h(u(t))`` on the trajectory times as a forcing series."""
    from .propagator import FieldSeries

    h = h_array(traj.u, traj.times, params, derived, traj.grid, dealias)
    return FieldSeries(traj.grid, traj.times, h)
