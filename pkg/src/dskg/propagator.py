"""Fourier-multiplier propagators, Duhamel integrals and the two solvers.

The linear problem ``c^-2 u_tt - e^{-2Ht} Lap u + Q u + h = 0`` is solved
mode by mode with the fundamental pair of :mod:`dskg.mode_ode`::

    u(t) = K0(t) u0 + K1(t) u1 - c^2 int_0^t rho12(t, s) h(s) ds

with ``rho12(t, s) = -rho0(t) rho1(s) + rho1(t) rho0(s)``.  The kernel is
separable, so the Duhamel term is evaluated from two running Simpson
integrals ``int rho0 h`` and ``int rho1 h``.

``picard_solve`` iterates that map on the full nonlinear source.
``direct_solve`` is the independent method-of-lines oracle: spectral
Laplacian and classical RK4 on ``(u, u_t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import mode_ode
from .nonlinearity import J_array, cubic_array, gauge_array, h_array
from .quadrature import cumulative_simpson
from .spectral import Field, Grid, irfft, rfft, sobolev_norms_batch
from .validation import as_field_array, check_same_grid, check_time_grid


class Equation(str, Enum):
    linear = "linear"
    shifted_cubic = "shifted_cubic"
    gauge_variant_blowup = "gauge_variant_blowup"
    gauge_invariant = "gauge_invariant"
    unshifted = "unshifted"
    shifted_friction = "shifted_friction"


@dataclass(frozen=True, eq=False)
class StateSnapshot:
    t: float
    u: Field
    ut: Field

    def __post_init__(self):
        check_same_grid(self.u.grid, self.ut.grid)


@dataclass(eq=False)
class FieldSeries:
    """Fields sampled on a uniform time grid, e.g. a forcing ``h(s)``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = check_time_grid(self.times, uniform=True)
        self.values = np.asarray(self.values, dtype=float).reshape(
            (self.times.size,) + self.grid.shape)


@dataclass(eq=False)
class Trajectory:
    """Time-ordered snapshots of ``(u, u_t)`` on a uniform time grid.

    ``diverged_at`` is set when a run stopped on overflow; the stored
    snapshots are then the finite ones before it.
    """

    grid: Grid
    times: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    params: object
    equation: Equation
    derived: object = None
    Q: float | None = None
    diverged_at: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        shape = (self.times.size,) + self.grid.shape
        self.u = np.asarray(self.u, dtype=float).reshape(shape)
        self.ut = np.asarray(self.ut, dtype=float).reshape(shape)
        self.equation = Equation(self.equation)

    def __len__(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a trajectory sample")
        return i

    def snapshot(self, i: int) -> StateSnapshot:
        return StateSnapshot(float(self.times[i]), Field(self.grid, self.u[i]),
                             Field(self.grid, self.ut[i]))

    def l2(self) -> np.ndarray:
        axes = tuple(range(1, self.grid.n + 1))
        return np.sqrt(np.sum(self.u**2, axis=axes) * self.grid.weight)

    def integral(self) -> np.ndarray:
        """``w(t) = int u(t, x) dx`` for every snapshot."""
        axes = tuple(range(1, self.grid.n + 1))
        return np.sum(self.u, axis=axes) * self.grid.weight


class ContractionError(RuntimeError):
    """Picard iteration failed to contract; ``history`` holds the ratios."""

    def __init__(self, message: str, history: ContractionHistory):
        super().__init__(message)
        self.history = history


@dataclass
class ContractionHistory:
    distances: list = field(default_factory=list)
    sup_l2_changes: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.distances)


# --------------------------------------------------------------------------
# symbol tables


class ModeTable:
    """Fundamental pairs for every real-FFT mode of ``grid`` on ``tgrid``."""

    def __init__(self, grid: Grid, tgrid, c: float, H: float, Q: float,
                 tol: float = mode_ode.DEFAULT_TOL, cache=mode_ode.default_cache):
        self.grid = grid
        self.tgrid = check_time_grid(tgrid)
        self.c, self.H, self.Q = c, H, Q
        flat = grid.rksq.ravel()
        self.shells, self.inverse = np.unique(flat, return_inverse=True)
        self.table = mode_ode.mode_table(self.shells, self.tgrid, c, H, Q, tol=tol, cache=cache)

    def at(self, j: int) -> np.ndarray:
        """``(rho0, rho1, drho0, drho1)`` at time index ``j`` on the rfft layout."""
        rshape = self.grid.rksq.shape
        return self.table[:, self.inverse, j].reshape((4,) + rshape)

    def full(self) -> np.ndarray:
        """All four symbols with shape ``(4, nt, *rfft_shape)``."""
        rshape = self.grid.rksq.shape
        arr = self.table[:, self.inverse, :]
        return np.moveaxis(arr, 2, 1).reshape((4, self.tgrid.size) + rshape)


def _q_linear(equation: Equation, params, derived) -> float:
    if equation in (Equation.gauge_variant_blowup, Equation.gauge_invariant):
        return params.mass_star_squared_term - params.friction_term
    if equation is Equation.unshifted:
        return -params.mass_term
    if equation is Equation.shifted_friction:
        return 0.0
    return derived.Q


# --------------------------------------------------------------------------
# linear propagation


def apply_free(t: float, u0, u1, params, Q: float, t0: float = 0.0) -> StateSnapshot:
    """Free evolution ``(K0(t) u0 + K1(t) u1, d/dt of the same)``.

    ``t0`` re-bases the fundamental pair: the data are imposed at ``t0``.
    """
    grid = u0.grid
    a0 = as_field_array(u0, grid)
    a1 = as_field_array(u1, grid)
    if t == t0:
        return StateSnapshot(t, Field(grid, a0.copy()), Field(grid, a1.copy()))
    table = ModeTable(grid, [t0, t], params.c, params.H, Q)
    r0, r1, d0, d1 = table.at(1)
    h0, h1 = rfft(a0, grid), rfft(a1, grid)
    u = irfft(r0 * h0 + r1 * h1, grid)
    ut = irfft(d0 * h0 + d1 * h1, grid)
    return StateSnapshot(t, Field(grid, u), Field(grid, ut))


def free_trajectory(u0, u1, tgrid, params, Q: float, table: ModeTable | None = None) -> Trajectory:
    grid = u0.grid
    t = check_time_grid(tgrid, uniform=True)
    if table is None:
        table = ModeTable(grid, t, params.c, params.H, Q)
    R = table.full()
    a0, a1 = as_field_array(u0, grid), as_field_array(u1, grid)
    h0, h1 = rfft(a0, grid), rfft(a1, grid)
    u = irfft(R[0] * h0 + R[1] * h1, grid)
    ut = irfft(R[2] * h0 + R[3] * h1, grid)
    if t[0] == 0.0:
        # the pair is the identity at the origin; keep the data free of FFT roundoff
        u[0], ut[0] = a0, a1
    return Trajectory(grid, t, u, ut, params, Equation.linear, Q=Q)


def duhamel_series(forcing: FieldSeries, params, Q: float,
                   table: ModeTable | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``-c^2 int_0^t K-kernel h ds`` and its time derivative at every forcing time."""
    grid = forcing.grid
    if table is None:
        table = ModeTable(grid, forcing.times, params.c, params.H, Q)
    R = table.full()
    hh = rfft(forcing.values, grid)
    dt = float(forcing.times[1] - forcing.times[0]) if forcing.times.size > 1 else 0.0
    I0 = cumulative_simpson(R[0] * hh, dt)
    I1 = cumulative_simpson(R[1] * hh, dt)
    c2 = params.c**2
    ud = irfft(-c2 * (R[1] * I0 - R[0] * I1), grid)
    utd = irfft(-c2 * (R[3] * I0 - R[2] * I1), grid)
    return ud, utd


def duhamel_apply(t: float, forcing: FieldSeries, params, Q: float) -> Field:
    """``-int_0^t K(t, s) h(s) ds`` evaluated with composite Simpson in ``s``."""
    times = forcing.times
    if t > times[-1] + 1e-12 * max(1.0, abs(t)) or t < times[0]:
        raise ValueError(f"t = {t} lies outside the forcing grid [{times[0]}, {times[-1]}]")
    j = int(np.argmin(np.abs(times - t)))
    if abs(times[j] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not a forcing sample")
    # need one extra sample for the single-interval rule
    stop = max(j + 1, min(3, times.size))
    sub = FieldSeries(forcing.grid, times[:stop], forcing.values[:stop])
    ud, _ = duhamel_series(sub, params, Q)
    return Field(forcing.grid, ud[j])


# --------------------------------------------------------------------------
# Picard iteration


def _metric(du: np.ndarray, dut: np.ndarray, times: np.ndarray, grid: Grid,
            params, Q: float) -> float:
    uh, vh = rfft(du, grid), rfft(dut, grid)
    term = (sobolev_norms_batch(vh, grid, 0.0) / params.c
            + np.exp(-params.H * times) * sobolev_norms_batch(uh, grid, 1.0)
            + math.sqrt(max(Q, 0.0)) * sobolev_norms_batch(uh, grid, 0.0))
    return float(np.max(term))


def picard_solve(u0, u1, T: float, params, derived, tol: float = 1e-10,
                 max_iter: int = 50, dt: float = 1e-3, dealias: bool = True):
    """Fixed point of the mild-solution map for the shifted cubic equation.

    Starts from the free evolution and iterates
    ``u <- K0 u0 + K1 u1 - int K h(u)`` until the sup-in-time ``L^2``
    change drops below ``tol``.  Contraction is monitored in the metric
    ``sup_t (c^-1 ||d_t du|| + ||e^{-Ht} grad du|| + sqrt(Q) ||du||)``.

    Returns ``(trajectory, history)``; raises :class:`ContractionError`
    when the iteration diverges or ``max_iter`` is exhausted.
    """
    Q = derived.Q
    if not Q > 0:
        raise ValueError(f"Picard iteration needs Q > 0, got {Q}")
    grid = u0.grid
    nsteps = max(2, int(math.ceil(T / dt - 1e-9)))
    times = np.linspace(0.0, T, nsteps + 1)
    table = ModeTable(grid, times, params.c, params.H, Q)
    free = free_trajectory(u0, u1, times, params, Q, table)
    u, ut = free.u, free.ut
    hist = ContractionHistory()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            h = h_array(u, times, params, derived, grid, dealias)
            ud, utd = duhamel_series(FieldSeries(grid, times, h), params, Q, table)
            un, utn = free.u + ud, free.ut + utd
            if not (np.all(np.isfinite(un)) and np.all(np.isfinite(utn))):
                raise ContractionError("Picard iterate became non-finite", hist)
            d = _metric(un - u, utn - ut, times, grid, params, Q)
            change = float(np.max(np.sqrt(np.sum((un - u) ** 2,
                                                 axis=tuple(range(1, grid.n + 1))) * grid.weight)))
            if hist.distances and hist.distances[-1] > 0:
                hist.ratios.append(d / hist.distances[-1])
            hist.distances.append(d)
            hist.sup_l2_changes.append(change)
            u, ut = un, utn
            if change <= tol:
                hist.converged = True
                break
            if len(hist.distances) > 2 and d > 1e6 * hist.distances[0]:
                raise ContractionError(
                    f"Picard iteration diverging (ratios {hist.ratios[-3:]})", hist)
    if not hist.converged:
        raise ContractionError(
            f"no convergence in {max_iter} iterations; last ratios {hist.ratios[-3:]}", hist)
    traj = Trajectory(grid, times, u, ut, params, Equation.shifted_cubic, derived=derived, Q=Q)
    return traj, hist


# --------------------------------------------------------------------------
# direct method of lines


def stable_dt(grid: Grid, params, q_linear: float, T: float) -> float:
    """Largest step allowed by ``dt <= 0.5 / omega_max``.

    ``omega_max = c sqrt(max|xi|^2 e^{-2Ht*} + |q|)`` with ``t* = 0`` for
    ``H >= 0`` and ``t* = T`` for ``H < 0``.
    """
    tstar = 0.0 if params.H >= 0 else T
    kmax = grid.max_ksq() * math.exp(-2.0 * params.H * tstar)
    return 0.5 / (params.c * math.sqrt(kmax + abs(q_linear)))


def _acceleration(equation: Equation, params, derived, grid: Grid, q: float,
                  dealias: bool):
    c2 = params.c**2
    H = params.H
    friction = params.n * H if equation in (Equation.unshifted, Equation.shifted_friction) else 0.0
    rksq = grid.rksq

    def source(t, u):
        if equation is Equation.linear:
            return 0.0
        if equation is Equation.shifted_cubic:
            return h_array(u, t, params, derived, grid, dealias)
        if equation is Equation.gauge_variant_blowup:
            return gauge_array(u, t, params, -1, grid, dealias)
        if equation is Equation.gauge_invariant:
            return gauge_array(u, t, params, 1, grid, dealias)
        if equation is Equation.unshifted:
            return cubic_array(u, params, grid, dealias)
        return J_array(u, params, derived, grid, dealias)

    def accel(t, u, v):
        lap = irfft(-rksq * rfft(u, grid), grid)
        a = c2 * (math.exp(-2.0 * H * t) * lap - q * u - source(t, u))
        if friction:
            a = a - friction * v
        return a

    return accel


def direct_solve(u0, u1, T: float, dt: float, equation: Equation | str, params, derived,
                 save_every: int = 1, dealias: bool = True, check_stability: bool = True,
                 overflow: float = 1e100) -> Trajectory:
    """Method-of-lines integration with classical RK4.

    The step is adjusted down so that ``T / dt`` is an integer.  Overflow
    or non-finite values stop the run and set ``diverged_at`` on the
    returned trajectory, which keeps the last finite snapshots.
    """
    equation = Equation(equation)
    grid = u0.grid
    u = as_field_array(u0, grid).copy()
    v = as_field_array(u1, grid).copy()
    q = _q_linear(equation, params, derived)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / nsteps
    if check_stability:
        limit = stable_dt(grid, params, q, T)
        if h > limit * (1 + 1e-12):
            raise ValueError(f"dt = {h:.3g} exceeds the stability bound {limit:.3g}")
    accel = _acceleration(equation, params, derived, grid, q, dealias)
    times, us, vs = [0.0], [u.copy()], [v.copy()]
    diverged = None
    t = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, nsteps + 1):
            k1u, k1v = v, accel(t, u, v)
            k2u = v + 0.5 * h * k1v
            k2v = accel(t + 0.5 * h, u + 0.5 * h * k1u, k2u)
            k3u = v + 0.5 * h * k2v
            k3v = accel(t + 0.5 * h, u + 0.5 * h * k2u, k3u)
            k4u = v + h * k3v
            k4v = accel(t + h, u + h * k3u, k4u)
            u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            t = step * h
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))) or \
                    np.max(np.abs(u)) > overflow:
                diverged = t
                break
            if step % save_every == 0:
                times.append(t)
                us.append(u.copy())
                vs.append(v.copy())
    return Trajectory(grid, np.array(times), np.array(us), np.array(vs), params,
                      equation, derived=derived, Q=q, diverged_at=diverged)
