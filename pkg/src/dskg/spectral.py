"""Periodic-box discretisation, Fourier transforms and Sobolev-type norms.

The continuum problem lives on ``R^n``; here it is truncated to the box
``[-L/2, L/2)^n`` with ``N`` points per axis.  One Fourier convention is
used everywhere: the orthonormal DFT, so that

    sum |f_j|^2 (L/N)^n == sum |fhat_k|^2 (L/N)^n

and every norm carries the Parseval weight ``(L/N)^n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .validation import check_finite, check_same_grid


class NormKind(str, Enum):
    homogeneous = "homogeneous"
    inhomogeneous = "inhomogeneous"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with ``N`` points per axis on a box of side ``L``."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"only n in {{1, 2, 3}} is supported, got {self.n}")
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def weight(self) -> float:
        """Parseval/quadrature weight ``(L/N)^n``."""
        return self.dx**self.n

    @property
    def volume(self) -> float:
        return self.L**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.coords))

    @cached_property
    def _kint(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Per-axis wavenumbers ``2 pi k / L`` in FFT order."""
        return 2.0 * np.pi / self.L * self._kint

    def _ksq(self, kints: list[np.ndarray]) -> np.ndarray:
        # Integer shell index first so equal |xi|^2 give bit-identical floats.
        grids = np.meshgrid(*kints, indexing="ij")
        shell = sum(k.astype(np.int64) ** 2 for k in grids)
        return (2.0 * np.pi / self.L) ** 2 * shell

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|xi|^2`` on the full FFT layout."""
        return self._ksq([self._kint] * self.n)

    @cached_property
    def rksq(self) -> np.ndarray:
        """``|xi|^2`` on the real-FFT layout (last axis halved)."""
        last = np.arange(self.N // 2 + 1)
        return self._ksq([self._kint] * (self.n - 1) + [last])

    @cached_property
    def rk_components(self) -> tuple[np.ndarray, ...]:
        """Per-axis wavenumber arrays broadcast on the real-FFT layout."""
        scale = 2.0 * np.pi / self.L
        last = np.arange(self.N // 2 + 1)
        grids = np.meshgrid(*([self._kint] * (self.n - 1) + [last]), indexing="ij")
        return tuple(scale * g for g in grids)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule on the full layout: keep ``|k_j| <= N/3`` per axis."""
        keep = np.abs(self._kint) <= self.N // 3
        grids = np.meshgrid(*([keep] * self.n), indexing="ij")
        return np.logical_and.reduce(grids)

    @cached_property
    def rdealias_mask(self) -> np.ndarray:
        keep = np.abs(self._kint) <= self.N // 3
        last = np.arange(self.N // 2 + 1) <= self.N // 3
        grids = np.meshgrid(*([keep] * (self.n - 1) + [last]), indexing="ij")
        return np.logical_and.reduce(grids)

    def max_ksq(self) -> float:
        return float(self.ksq.max())


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a field on the lattice, stored with shape ``grid.shape``."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.size != self.grid.N**self.grid.n:
            raise ValueError(
                f"expected {self.grid.N ** self.grid.n} samples, got {arr.size}")
        arr = arr.reshape(self.grid.shape)
        check_finite(arr, "field samples")
        object.__setattr__(self, "samples", arr)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.samples**2) * self.grid.weight))

    def integral(self) -> float:
        return float(np.sum(self.samples) * self.grid.weight)

    def __add__(self, other: Field) -> Field:
        check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: Field) -> Field:
        check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.samples - other.samples)

    def __mul__(self, scalar: float) -> Field:
        return Field(self.grid, self.samples * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Orthonormal DFT coefficients in FFT order."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {arr.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", arr)

    def hermitian_defect(self) -> float:
        """Max ``|c(xi) - conj(c(-xi))|``; zero for a real field."""
        flipped = self.coeffs
        for ax in range(self.grid.n):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        return float(np.max(np.abs(self.coeffs - np.conj(flipped))))


def transform(field: Field) -> SpectralField:
    return SpectralField(field.grid, sfft.fftn(field.samples, norm="ortho"))


def inverse(sf: SpectralField) -> Field:
    return Field(sf.grid, sfft.ifftn(sf.coeffs, norm="ortho").real)


def rfft(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """Real-FFT over the last ``n`` axes (leading axes are batch)."""
    axes = tuple(range(-grid.n, 0))
    return sfft.rfftn(samples, axes=axes, norm="ortho")


def irfft(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return sfft.irfftn(coeffs, s=grid.shape, axes=axes, norm="ortho")


def dealias(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero the modes outside the two-thirds band of physical samples."""
    return irfft(rfft(samples, grid) * grid.rdealias_mask, grid)


def laplacian(samples: np.ndarray, grid: Grid) -> np.ndarray:
    return irfft(-grid.rksq * rfft(samples, grid), grid)


def _symbol(ksq: np.ndarray, mu: float, kind: NormKind) -> np.ndarray:
    if kind is NormKind.inhomogeneous:
        return (1.0 + ksq) ** mu
    if mu == 0:
        return np.ones_like(ksq)
    with np.errstate(divide="ignore"):
        return np.where(ksq > 0, ksq**mu, 0.0)


def sobolev_norm(sf: SpectralField, mu: float, kind: NormKind | str = "homogeneous",
                 shift: float = 0.0, allow_negative: bool = False) -> float:
    """Discrete Sobolev norm of a spectral field.

    Homogeneous: ``(sum |xi|^(2 mu) |u(xi)|^2 w)^(1/2)``; inhomogeneous
    replaces ``|xi|^(2 mu)`` by ``(1 + |xi|^2)^mu``.  A positive ``shift``
    adds ``shift * ||u||_{L^2}^2`` under the root.  Negative orders are
    only accepted for the inhomogeneous kind with ``allow_negative``.
    """
    kind = NormKind(kind)
    if mu < 0 and not (allow_negative and kind is NormKind.inhomogeneous):
        raise ValueError(f"Sobolev order must be nonnegative, got {mu}")
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    power = np.abs(sf.coeffs) ** 2
    total = np.sum(_symbol(sf.grid.ksq, mu, kind) * power)
    if shift:
        total += shift * np.sum(power)
    return float(np.sqrt(total * sf.grid.weight))


def sobolev_norms_batch(coeffs: np.ndarray, grid: Grid, mu: float,
                        kind: NormKind | str = "homogeneous") -> np.ndarray:
    """Norms of a stack of real-FFT coefficient arrays (leading axis = batch).

    Accounts for the half-spectrum storage of the real FFT.
    """
    kind = NormKind(kind)
    sym = _symbol(grid.rksq, mu, kind)
    mult = np.full(grid.rksq.shape[-1], 2.0)
    mult[0] = 1.0
    if grid.N % 2 == 0:
        mult[-1] = 1.0
    power = np.abs(coeffs) ** 2 * sym * mult
    axes = tuple(range(-grid.n, 0))
    return np.sqrt(np.sum(power, axis=axes) * grid.weight)


def d_norm(u0: Field, u1: Field, mu: float, params, Q: float | None = None) -> float:
    """Data norm ``c^-1 ||u1||_{H^mu} + ||grad u0||_{H^mu} + sqrt(Q) ||u0||_{H^mu}``."""
    from .params import derive_constants

    check_same_grid(u0.grid, u1.grid)
    if Q is None:
        Q = derive_constants(params).Q
    if Q < 0:
        raise ValueError(f"data norm needs Q >= 0, got {Q}")
    s0, s1 = transform(u0), transform(u1)
    return (sobolev_norm(s1, mu) / params.c + sobolev_norm(s0, mu + 1)
            + np.sqrt(Q) * sobolev_norm(s0, mu))


def _trapezoid(values: np.ndarray, times: np.ndarray) -> float:
    if len(times) < 2:
        return 0.0
    return float(np.trapezoid(values, times))


def x_norm_terms(traj, mu: float, params, regime: str, Q: float | None = None) -> tuple[float, ...]:
    """Individual terms of the discrete space-time norm of a trajectory.

    ``regime='H_nonneg'`` gives the four-term norm used for ``H >= 0``,
    ``regime='H_neg'`` the five-term weighted norm for ``H < 0``.  Sup
    norms are maxima over snapshots, time integrals use the trapezoidal
    rule.
    """
    from .params import derive_constants

    H, c = params.H, params.c
    if regime == "H_nonneg" and H < 0 or regime == "H_neg" and H >= 0:
        raise ValueError(f"regime {regime!r} does not match H = {H}")
    if regime not in ("H_nonneg", "H_neg"):
        raise ValueError(f"unknown regime {regime!r}")
    if Q is None:
        Q = derive_constants(params).Q
    if Q < 0:
        raise ValueError(f"space-time norm needs Q >= 0, got {Q}")

    grid = traj.grid
    t = np.asarray(traj.times)
    uh = rfft(traj.u, grid)
    vh = rfft(traj.ut, grid)
    u_mu = sobolev_norms_batch(uh, grid, mu)
    u_mu1 = sobolev_norms_batch(uh, grid, mu + 1)
    v_mu = sobolev_norms_batch(vh, grid, mu)

    if regime == "H_nonneg":
        decay = np.exp(-H * t)
        return (
            float(np.max(v_mu)) / c,
            float(np.max(decay * u_mu1)),
            float(np.sqrt(Q) * np.max(u_mu)),
            float(np.sqrt(H) * np.sqrt(_trapezoid((decay * u_mu1) ** 2, t))),
        )
    grow = np.exp(H * t)
    return (
        float(np.max(grow * v_mu)) / c,
        float(np.max(u_mu1)),
        float(np.sqrt(Q) * np.max(grow * u_mu)),
        float(np.sqrt(-H) * np.sqrt(_trapezoid((grow * v_mu) ** 2, t)) / c),
        float(np.sqrt(-H * Q) * np.sqrt(_trapezoid((grow * u_mu) ** 2, t))),
    )


def x_norm(traj, mu: float, params, regime: str, Q: float | None = None) -> float:
    return float(sum(x_norm_terms(traj, mu, params, regime, Q)))
