"""Nonlinear source terms of the shifted, unshifted and gauge-variant equations.

Fields are real throughout, so ``Re u = u`` and ``|u|^2 = u^2`` are used
directly.  Polynomial products are computed pointwise and then, when
``dealias`` is set, projected onto the two-thirds band; terms linear in
the field are never filtered.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .spectral import Field, dealias as _dealias
from .validation import check_finite


class NonlinearKind(str, Enum):
    h_shifted = "h_shifted"
    J_shifted = "J_shifted"
    cubic_unshifted = "cubic_unshifted"
    gauge_variant_p = "gauge_variant_p"


def _r0(params, derived) -> float:
    if params.lam == 0:
        return 0.0 if derived.r0 is None else derived.r0
    return derived.require_r0()


def _finish(values: np.ndarray, grid, dealias: bool) -> np.ndarray:
    return _dealias(values, grid) if dealias else values


def h_array(u: np.ndarray, t: float, params, derived, grid, dealias: bool = True) -> np.ndarray:
    """Array form of :func:`eval_h`; ``u`` may carry leading batch axes."""
    lam = params.lam
    if lam == 0:
        return np.zeros_like(u)
    r0 = _r0(params, derived)
    nH = params.n * params.H
    t = np.asarray(t, dtype=float).reshape(np.shape(t) + (1,) * grid.n)
    vals = lam * np.exp(-nH * t) * u**3 + 3.0 * lam * r0 * np.exp(-0.5 * nH * t) * u**2
    return _finish(vals, grid, dealias)


def eval_h(u: Field, t: float, params, derived, dealias: bool = True) -> Field:
    """Shifted-equation source ``lam e^{-nHt} u^3 + 3 lam r0 e^{-nHt/2} u^2``."""
    check_finite(u.samples, "u")
    return Field(u.grid, h_array(u.samples, t, params, derived, u.grid, dealias))


def J_array(phi: np.ndarray, params, derived, grid, dealias: bool = True) -> np.ndarray:
    lam = params.lam
    r0 = _r0(params, derived)
    nonlin = _finish(phi**3 + 3.0 * r0 * phi**2, grid, dealias)
    return lam * (nonlin + 2.0 * r0**2 * phi)


def eval_J(phi: Field, params, derived, dealias: bool = True) -> Field:
    """Potential gradient about the broken vacuum: ``lam (phi^3 + 3 r0 phi^2 + 2 r0^2 phi)``."""
    check_finite(phi.samples, "phi")
    return Field(phi.grid, J_array(phi.samples, params, derived, phi.grid, dealias))


def shift_identity_residual(phi: Field, params, derived) -> float:
    """Max-norm of ``lam (phi + r0)^3 - (m c/hbar)^2 (phi + r0) - J(phi)``.

    Vanishes identically because ``lam r0^2 = (m c / hbar)^2``.
    """
    r0 = derived.require_r0()
    x = phi.samples
    shifted = x + r0
    lhs = params.lam * shifted**3 - params.mass_term * shifted
    J = J_array(x, params, derived, phi.grid, dealias=False)
    return float(np.max(np.abs(lhs - J)))


def cubic_array(phi: np.ndarray, params, grid, dealias: bool = True) -> np.ndarray:
    return params.lam * _finish(phi**3, grid, dealias)


def gauge_array(u: np.ndarray, t: float, params, sign: int, grid,
                dealias: bool = True) -> np.ndarray:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = params.p
    weight = math.exp(-params.n * (p - 1.0) * params.H * t / 2.0)
    au = np.abs(u)
    if sign == 1:
        vals = params.lam * weight * au ** (p - 1.0) * u
    else:
        vals = -weight * au**p
    return _finish(vals, grid, dealias)


def eval_gauge_variant(u: Field, t: float, params, sign: int = -1,
                       dealias: bool = True) -> Field:
    """Power nonlinearity of the ``u = e^{nHt/2} phi`` equation.

    ``sign=+1`` gives ``lam e^{-n(p-1)Ht/2} |u|^{p-1} u``; ``sign=-1`` the
    blow-up source ``-e^{-n(p-1)Ht/2} |u|^p``.
    """
    check_finite(u.samples, "u")
    return Field(u.grid, gauge_array(u.samples, t, params, sign, u.grid, dealias))


def evaluate(kind: NonlinearKind | str, field: Field, t: float, params, derived,
             dealias: bool = True) -> Field:
    kind = NonlinearKind(kind)
    if kind is NonlinearKind.h_shifted:
        return eval_h(field, t, params, derived, dealias)
    if kind is NonlinearKind.J_shifted:
        return eval_J(field, params, derived, dealias)
    if kind is NonlinearKind.cubic_unshifted:
        return Field(field.grid, cubic_array(field.samples, params, field.grid, dealias))
    return eval_gauge_variant(field, t, params, -1, dealias)
