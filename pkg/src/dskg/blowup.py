"""Scalar blow-up dynamics for the spatial integral ``w(t) = int u dx``.

For the gauge-variant equation with source ``-e^{-n(p-1)Ht/2} |u|^p`` and
``Q = (m_* c/hbar)^2 - (nH/2c)^2 <= 0``, integrating over space gives
``c^-2 w'' + Q w = h`` with ``h >= b(t) |w|^p`` once the support of the
solution is confined to the light-cone ball of radius ``r(t)``.  The
comparison dynamics ``w'' = c^2 (-Q w + b(t) |w|^p)`` is integrated here,
together with the lower envelopes that the growth argument produces, and
a detector for the finite blow-up time.

The lifespan bound for contracting backgrounds lives here as well since
it is the other scalar certificate of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp

from .params import unit_ball_volume

DIVERGENCE_LEVEL = 1e12


class HypothesisViolation(ValueError):
    """The data do not satisfy the assumptions of the growth argument."""


def support_radius(t, r_support0: float, params):
    """Light-cone radius ``r0 + c (1 - e^{-Ht}) / H`` (``r0 + c t`` at ``H = 0``)."""
    t = np.asarray(t, dtype=float)
    H, c = params.H, params.c
    if H == 0:
        out = r_support0 + c * t
    else:
        out = r_support0 - c * np.expm1(-H * t) / H
    return out if out.ndim else float(out)


def support_radius_cap(t, r_support0: float, params):
    """Upper caps on ``r(t)``: ``r0 + c/H`` for ``H > 0``, ``2c e^{-Ht}/|H|`` for ``H < 0``.

    The second cap only holds once ``t`` is large enough; see
    :func:`threshold_time`.
    """
    H, c = params.H, params.c
    t = np.asarray(t, dtype=float)
    if H > 0:
        out = np.full(t.shape, r_support0 + c / H)
    elif H < 0:
        out = 2.0 * c * np.exp(-H * t) / abs(H)
    else:
        raise ValueError("no bounded cap exists for H = 0")
    return out if out.ndim else float(out)


def b_exact(t, r_support0: float, params):
    """``b(t) = e^{-n(p-1)Ht/2} (omega_n r(t)^n)^{1-p}``."""
    n, p, H = params.n, params.p, params.H
    t = np.asarray(t, dtype=float)
    r = support_radius(t, r_support0, params)
    out = np.exp(-n * (p - 1) * H * t / 2.0) * (unit_ball_volume(n) * r**n) ** (1.0 - p)
    return out if np.ndim(out) else float(out)


def B_constant(r_support0: float, params) -> float:
    n, p, H, c = params.n, params.p, params.H, params.c
    base = unit_ball_volume(n) ** (1.0 - p)
    if H > 0:
        return base * (r_support0 + c / H) ** (-n * (p - 1))
    if H < 0:
        return base * (2.0 * c / abs(H)) ** (-n * (p - 1))
    raise ValueError("the floor constant B is only defined for H != 0")


def b_floor(t, r_support0: float, params):
    """``B e^{-n(p-1)|H|t/2}``."""
    n, p, H = params.n, params.p, params.H
    t = np.asarray(t, dtype=float)
    out = B_constant(r_support0, params) * np.exp(-n * (p - 1) * abs(H) * t / 2.0)
    return out if np.ndim(out) else float(out)


def onset_time(tgrid: np.ndarray, holds: np.ndarray) -> float | None:
    """First sample after which ``holds`` is true on the rest of the grid."""
    holds = np.asarray(holds, dtype=bool)
    if not holds[-1]:
        return None
    bad = np.nonzero(~holds)[0]
    return float(tgrid[0] if bad.size == 0 else tgrid[bad[-1] + 1])


def threshold_time(r_support0: float, params, t_max: float, samples: int = 20001,
                   rtol: float = 1e-12) -> float | None:
    """Concrete stand-in for "t large enough" in the floor and monotonicity claims.

    Returns the first time on a dense grid of ``[0, t_max]`` beyond which
    both ``b(t) >= B e^{-n(p-1)|H|t/2}`` and ``b'(t) <= 0`` hold.
    """
    t = np.linspace(0.0, t_max, samples)
    b = b_exact(t, r_support0, params)
    floor_ok = b >= b_floor(t, r_support0, params) * (1.0 - rtol)
    db = np.gradient(b, t)
    mono_ok = db <= rtol * np.abs(b)
    return onset_time(t, floor_ok & mono_ok)


def w_closed_form(t: float, w0: float, w1: float, M: float, params,
                  forcing: Callable[[float], float] | None = None) -> float:
    """Variation-of-constants solution of ``c^-2 w'' - M^2 w = h``."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    c = params.c
    x = c * M * t
    if M == 0:
        out = w0 + w1 * t
    else:
        out = math.cosh(x) * w0 + math.sinh(x) / (c * M) * w1
    if forcing is not None and t > 0:
        if M == 0:
            kern = lambda s: (t - s) * forcing(s)  # noqa: E731
        else:
            kern = lambda s: math.sinh(c * M * (t - s)) / (c * M) * forcing(s)  # noqa: E731
        val, _ = quad(kern, 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=200)
        out += c**2 * val
    return float(out)


@dataclass
class EnvelopeCheck:
    bound_id: str
    passed: bool | None
    margin: float
    note: str = ""


@dataclass
class WTrajectory:
    tgrid: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    blowup_time: float | None
    envelope_checks: list = field(default_factory=list)
    M: float = 0.0
    M1: float | None = None
    B: float | None = None
    t_star: float | None = None
    t1: float | None = None
    epsilon: float = 0.1
    b_model: str = "exact_b"
    p: float = 3.0

    @property
    def all_passed(self) -> bool:
        return all(ch.passed is not False for ch in self.envelope_checks)

    @property
    def comparison_exponent(self) -> float:
        """Exponent ``1 + eps (p - 1) / 2`` of the first-order comparison law (reporting only)."""
        return 1.0 + self.epsilon * (self.p - 1.0) / 2.0

    def check(self, bound_id: str) -> EnvelopeCheck:
        for ch in self.envelope_checks:
            if ch.bound_id == bound_id:
                return ch
        raise KeyError(bound_id)


def extrapolate_blowup(t: float, w: float, dw: float, ddw: float) -> float:
    """Blow-up time from the local power-law fit ``w ~ A (T - t)^{-a}``.

    With ``g = w w'' / w'^2`` the exponent is ``a = 1 / (g - 1)`` and
    ``T = t + a w / w'``; exact for pure power laws.
    """
    g = w * ddw / dw**2
    if not g > 1:
        return math.nan
    return t + (w / dw) / (g - 1.0)


def _check_hypotheses(w0: float, w1: float, M: float, params) -> None:
    c = params.c
    if w0 < 0:
        raise HypothesisViolation(f"w0 must be nonnegative, got {w0}")
    if not w1 > 0:
        raise HypothesisViolation(f"w1 must be positive, got {w1}")
    if w1 < c * M * w0 * (1 - 1e-14):
        raise HypothesisViolation(f"w1 = {w1} must be at least c M w0 = {c * M * w0}")
    if w0 == 0 and math.isclose(M, params.n * abs(params.H) / (2 * c), rel_tol=1e-14):
        raise HypothesisViolation("w0 must be positive in the massless case")


def integrate_w(w0: float, w1: float, params, derived, p: float | None = None,
                b_model: str = "exact_b", r_support0: float = 1.0, t_max: float = 100.0,
                rtol: float = 1e-12, atol: float = 1e-14, epsilon: float = 0.1,
                check_hypotheses: bool = True) -> WTrajectory:
    """Integrate ``w'' = c^2 (-Q w + b(t) |w|^p)`` until divergence or ``t_max``.

    ``b_model`` is ``exact_b`` (light-cone weight), ``floor_B`` (its
    exponential floor) or ``zero`` (linear reduction).  Divergence is the
    event ``|w| = 1e12``; the blow-up time is then extrapolated from the
    local power law.  All envelope checks are run on the accepted steps.
    """
    if p is not None and p != params.p:
        from dataclasses import replace

        params = replace(params, p=p)
    p = params.p
    Q = derived.Q
    if Q > 0:
        raise HypothesisViolation(f"the blow-up reduction needs Q <= 0, got {Q}")
    M = math.sqrt(-Q)
    if check_hypotheses:
        _check_hypotheses(w0, w1, M, params)
    c2 = params.c**2

    if b_model == "exact_b":
        bfun = lambda t: b_exact(t, r_support0, params)  # noqa: E731
    elif b_model == "floor_B":
        bfun = lambda t: b_floor(t, r_support0, params)  # noqa: E731
    elif b_model == "zero":
        bfun = lambda t: 0.0  # noqa: E731
    else:
        raise ValueError(f"unknown b_model {b_model!r}")

    def rhs(t, y):
        return [y[1], c2 * (-Q * y[0] + bfun(t) * abs(y[0]) ** p)]

    def event(t, y):
        return abs(y[0]) - DIVERGENCE_LEVEL

    event.terminal = True
    sol = solve_ivp(rhs, (0.0, t_max), [w0, w1], method="DOP853", rtol=rtol, atol=atol,
                    events=event)
    t, w, dw = sol.t, sol.y[0], sol.y[1]
    blowup = None
    if sol.status == 1 and sol.t_events[0].size:
        te = float(sol.t_events[0][0])
        we, dwe = sol.y_events[0][0]
        ddwe = rhs(te, [we, dwe])[1]
        blowup = extrapolate_blowup(te, we, dwe, ddwe)
    elif sol.status < 0:
        raise RuntimeError(f"w integration failed: {sol.message}")

    out = WTrajectory(t, w, dw, blowup, M=M, epsilon=epsilon, b_model=b_model, p=p)
    _envelopes(out, w0, params, r_support0, bfun)
    return out


def _envelopes(traj: WTrajectory, w0: float, params, r_support0: float, bfun) -> None:
    c, H, p = params.c, params.H, params.p
    t, w, dw = traj.tgrid, traj.w, traj.dw
    M = traj.M
    # primary exponential envelope, compared in log form to survive large w
    with np.errstate(divide="ignore"):
        if w0 > 0:
            margin = np.log(w) - (math.log(w0) + c * M * t)
            worst = float(np.min(margin))
            traj.envelope_checks.append(EnvelopeCheck("w_ge_w0_exp_cMt", worst >= -1e-12, worst,
                                                      "log w - log(w0 e^{cMt})"))
        else:
            worst = float(np.min(w))
            traj.envelope_checks.append(EnvelopeCheck("w_ge_w0_exp_cMt", worst >= 0, worst,
                                                      "w0 = 0: envelope reduces to w >= 0"))

    if H == 0:
        traj.envelope_checks.append(EnvelopeCheck("b_floor", None, math.nan,
                                                  "no floor constant at H = 0"))
        return
    traj.B = B_constant(r_support0, params)
    horizon = max(float(t[-1]), 1.0)
    tstar = threshold_time(r_support0, params, max(horizon, 4.0 / abs(H) * 10))
    traj.t_star = tstar
    if tstar is None:
        traj.envelope_checks.append(EnvelopeCheck("b_floor", False, math.nan,
                                                  "floor never established on the scan"))
    else:
        ts = np.linspace(tstar, tstar + horizon, 4001)
        ratio = b_exact(ts, r_support0, params) / b_floor(ts, r_support0, params) - 1.0
        worst = float(np.min(ratio))
        traj.envelope_checks.append(EnvelopeCheck("b_floor", worst >= -1e-12, worst,
                                                  f"checked on t >= t* = {tstar:.6g}"))
        db = np.diff(b_exact(ts, r_support0, params))
        worst = float(-np.max(db))
        traj.envelope_checks.append(EnvelopeCheck("b_nonincreasing", worst >= -1e-15, worst,
                                                  "sampled differences beyond t*"))

    if w0 > 0:
        traj.M1 = math.sqrt(M**2 + traj.B * w0 ** (p - 1) / (p + 1))
        t1 = onset_time(t, dw >= c * traj.M1 * w)
        traj.t1 = t1
        if t1 is None:
            traj.envelope_checks.append(EnvelopeCheck("w_ge_secondary", None, math.nan,
                                                      "growth rate c M1 not reached"))
        else:
            i1 = int(np.searchsorted(t, t1))
            with np.errstate(divide="ignore"):
                margin = np.log(w[i1:]) - (math.log(w[i1]) + c * traj.M1 * (t[i1:] - t1))
            worst = float(np.min(margin))
            traj.envelope_checks.append(EnvelopeCheck("w_ge_secondary", worst >= -1e-12, worst,
                                                      f"t1 = {t1:.6g}"))


def separable_blowup(kappa: float, delta: float, w0: float, rtol: float = 1e-12,
                     t_max: float | None = None) -> tuple[float, float]:
    """Detected and analytic blow-up times of ``w' = kappa w^{1+delta}``.

    The analytic value is ``1 / (delta kappa w0^delta)``.
    """
    if not (kappa > 0 and delta > 0 and w0 > 0):
        raise ValueError("kappa, delta and w0 must be positive")
    exact = 1.0 / (delta * kappa * w0**delta)
    t_max = 2.0 * exact if t_max is None else t_max

    def rhs(t, y):
        return [kappa * abs(y[0]) ** (1.0 + delta)]

    def event(t, y):
        return y[0] - DIVERGENCE_LEVEL

    event.terminal = True
    sol = solve_ivp(rhs, (0.0, t_max), [w0], method="DOP853", rtol=rtol, atol=1e-14 * w0,
                    events=event)
    if not sol.t_events[0].size:
        return math.inf, exact
    te = float(sol.t_events[0][0])
    we = float(sol.y_events[0][0][0])
    dwe = kappa * we ** (1.0 + delta)
    ddwe = kappa * (1.0 + delta) * we**delta * dwe
    return extrapolate_blowup(te, we, dwe, ddwe), exact


# --------------------------------------------------------------------------
# lifespan bound for H < 0


@dataclass(frozen=True)
class LifespanCertificate:
    T: float
    lhs_at_T: float
    inputs: dict
    unbounded: bool = False
    rtol: float = 1e-10

    def as_text(self) -> str:
        lines = [f"T = {self.T!r}", f"lhs_at_T = {self.lhs_at_T!r}",
                 f"unbounded = {self.unbounded}", f"rtol = {self.rtol!r}"]
        lines += [f"{k} = {v!r}" for k, v in self.inputs.items()]
        return "\n".join(lines) + "\n"


def _lifespan_args(params, derived, mu0: float):
    H, n = params.H, params.n
    if not H < 0:
        raise ValueError(f"the lifespan bound needs H < 0, got {H}")
    Q = derived.Q
    if not Q > 0:
        raise ValueError(f"the lifespan bound needs Q > 0, got {Q}")
    lo = max(0.0, (n - 3) / 2.0)
    if not (lo <= mu0 < n / 2.0):
        raise ValueError(f"mu0 = {mu0} outside the admissible window [{lo}, {n / 2})")
    r0 = 0.0 if derived.r0 is None else derived.r0
    return H, n, Q, r0


def lifespan_lhs(T, params, derived, D_mu0: float, mu0: float, C: float = 1.0,
                 C0: float = 1.0):
    """Left side of the lifespan condition; increasing in ``T`` with value 0 at ``T = 0``."""
    H, n, Q, r0 = _lifespan_args(params, derived, mu0)
    T = np.asarray(T, dtype=float)
    a = 1.0 + mu0
    with np.errstate(over="ignore"):
        first = np.sqrt(np.expm1(-4.0 * a * H * T) / (4.0 * a)) * Q ** ((n - 3 - 2 * mu0) / 2.0)
        second = r0 * np.sqrt(np.expm1(-2.0 * a * H * T) / (2.0 * a)) * Q ** ((n - 4 - 2 * mu0) / 4.0)
        out = C * params.lam * params.c / (-H) * (first * C0 * D_mu0 + second)
    return out if out.ndim else float(out)


def lifespan_lower_bound(params, derived, D_mu0: float, mu0: float, C: float = 1.0,
                         C0: float = 1.0, rtol: float = 1e-10) -> LifespanCertificate:
    """Largest ``T`` with ``lhs(T) <= 1/2``, found by bisection to relative ``rtol``."""
    inputs = dict(params=params, D_mu0=D_mu0, mu0=mu0, C=C, C0=C0, Q=derived.Q, r0=derived.r0)
    f = lambda T: lifespan_lhs(T, params, derived, D_mu0, mu0, C, C0)  # noqa: E731
    if f(1.0) == 0.0:
        return LifespanCertificate(math.inf, 0.0, inputs, unbounded=True, rtol=rtol)
    lo, hi = 0.0, 1.0
    while f(hi) <= 0.5:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return LifespanCertificate(math.inf, f(lo), inputs, unbounded=True, rtol=rtol)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.5:
            lo = mid
        else:
            hi = mid
    return LifespanCertificate(lo, f(lo), inputs, rtol=rtol)


def lhs_is_monotone(cert: LifespanCertificate, params, derived, samples: int = 2001) -> bool:
    """Sampled-derivative check that the lifespan left side increases on ``[0, 2T]``."""
    if cert.unbounded:
        return True
    inp = cert.inputs
    T = np.linspace(0.0, 2.0 * cert.T, samples)
    vals = lifespan_lhs(T, params, derived, inp["D_mu0"], inp["mu0"], inp["C"], inp["C0"])
    return bool(np.all(np.gradient(vals, T)[1:] > 0))
