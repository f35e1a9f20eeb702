"""Physical parameters, derived constants and regime classification.

All quantities are dimensionless from the package's point of view; the
caller picks a unit system and only positivity constraints are enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Sign(str, Enum):
    positive = "positive"
    zero = "zero"
    negative = "negative"


HubbleSign = Sign


class MassType(str, Enum):
    real = "real"
    imaginary = "imaginary"
    zero = "zero"


@dataclass(frozen=True)
class PhysicalParams:
    """Parameter tuple of the de Sitter Klein-Gordon problem.

    Parameters
    ----------
    n : int
        Spatial dimension.
    c, hbar : float
        Speed of light and reduced Planck constant, both positive.
    H : float
        Hubble constant; positive expands, negative contracts.
    mass : float
        Mass parameter ``m``.
    lam : float
        Coupling constant ``lambda`` of the quartic potential.
    p : float
        Power of the gauge-variant nonlinearity, ``p > 1``.
    mass_squared_sign : int
        Sign applied to ``m**2``.  ``+1`` is the double-well
        parametrisation (real ``m`` in the shifted equation), ``-1`` the
        imaginary-mass reading used by the gauge-variant blow-up problem
        and ``0`` a massless field.
    """

    n: int = 1
    c: float = 1.0
    hbar: float = 1.0
    H: float = 0.0
    mass: float = 1.0
    lam: float = 1.0
    p: float = 3.0
    mass_squared_sign: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c!r}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p!r}")
        if self.mass_squared_sign not in (-1, 0, 1):
            raise ValueError("mass_squared_sign must be one of -1, 0, +1")
        for name in ("c", "hbar", "H", "mass", "lam", "p"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def mass_term(self) -> float:
        """``(m c / hbar)**2`` with the real parameter ``m``."""
        return (self.mass * self.c / self.hbar) ** 2

    @property
    def mass_star_squared_term(self) -> float:
        """``(m_* c / hbar)**2`` including the sign flag."""
        return self.mass_squared_sign * self.mass_term

    @property
    def friction_term(self) -> float:
        """``(n H / 2c)**2``."""
        return (self.n * self.H / (2.0 * self.c)) ** 2

    @property
    def hubble_threshold(self) -> float:
        """``2 sqrt(2) |m| c**2 / (n hbar)``, edge of both well-posedness windows."""
        return 2.0 * math.sqrt(2.0) * abs(self.mass) * self.c**2 / (self.n * self.hbar)


@dataclass(frozen=True)
class DerivedConstants:
    """Vacuum radius ``r0``, mass coefficient ``Q`` and ``M = sqrt(-Q)``.

    ``r0`` is ``None`` when the coupling is not positive and ``M`` is
    ``None`` when ``Q > 0``.
    """

    r0: float | None
    Q: float
    M: float | None = None

    def __post_init__(self):
        if self.r0 is not None and self.r0 < 0:
            raise ValueError("r0 must be nonnegative")
        if self.M is not None and self.M < 0:
            raise ValueError("M must be nonnegative")

    def require_r0(self) -> float:
        if self.r0 is None:
            raise ValueError("r0 is undefined: the coupling lambda must be positive")
        return self.r0

    def require_M(self) -> float:
        if self.M is None:
            raise ValueError(f"M = sqrt(-Q) is undefined for Q = {self.Q} > 0")
        return self.M


@dataclass(frozen=True)
class RegimeReport:
    hubble_sign: Sign
    nonnegative_H_window: bool
    negative_H_window: bool
    mass_type: MassType
    Q_sign: Sign

    @property
    def warnings(self) -> list[str]:
        out = []
        if not (self.nonnegative_H_window or self.negative_H_window):
            out.append("H lies outside both well-posedness windows")
        if self.mass_type is MassType.zero:
            out.append("zero mass: r0 = 0 and the quadratic term of h vanishes")
        return out


def _sign(x: float) -> Sign:
    if x > 0:
        return Sign.positive
    if x < 0:
        return Sign.negative
    return Sign.zero


def derive_constants(params: PhysicalParams, require_r0: bool = False) -> DerivedConstants:
    """Compute ``r0``, ``Q`` and ``M`` from the parameter tuple.

    With ``mass_squared_sign=+1`` the coefficient is
    ``Q = 2 (m c/hbar)^2 - (n H / 2c)^2``; otherwise the gauge-variant
    form ``Q = (m_* c/hbar)^2 - (n H / 2c)^2`` with ``m_*^2 <= 0``.
    """
    if params.lam > 0:
        r0 = abs(params.mass) * params.c / (math.sqrt(params.lam) * params.hbar)
    elif require_r0:
        raise ValueError(f"r0 requires lambda > 0, got lambda = {params.lam}")
    else:
        r0 = None

    if params.mass_squared_sign == 1:
        Q = 2.0 * params.mass_term - params.friction_term
    else:
        Q = params.mass_star_squared_term - params.friction_term
    M = math.sqrt(-Q) if Q <= 0 else None
    return DerivedConstants(r0=r0, Q=Q, M=M)


def validate_regime(params: PhysicalParams) -> RegimeReport:
    """Classify which well-posedness window the parameters fall into.

    Both windows use strict inequalities, so ``H`` equal to the threshold
    is outside.
    """
    thr = params.hubble_threshold
    H = params.H
    if params.mass_squared_sign == 1 and params.mass != 0:
        mass_type = MassType.real
    elif params.mass_squared_sign == -1 and params.mass != 0:
        mass_type = MassType.imaginary
    else:
        mass_type = MassType.zero
    return RegimeReport(
        hubble_sign=_sign(H),
        nonnegative_H_window=bool(0.0 <= H < thr),
        negative_H_window=bool(-thr < H < 0.0),
        mass_type=mass_type,
        Q_sign=_sign(derive_constants(params).Q),
    )


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in ``R^n``."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
