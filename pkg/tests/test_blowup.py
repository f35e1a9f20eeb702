import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from conftest import make
from dskg.blowup import (DIVERGENCE_LEVEL, B_constant, HypothesisViolation, b_exact, b_floor,
                         extrapolate_blowup, integrate_w, lhs_is_monotone, lifespan_lhs,
                         lifespan_lower_bound, separable_blowup, support_radius,
                         support_radius_cap, threshold_time, w_closed_form)
from dskg.params import DerivedConstants
from oracles import richardson_quadrature


def imaginary(H=0.5, p=2.0, n=1, c=1.0, mass=1.0):
    return make(H=H, p=p, n=n, c=c, mass=mass, mass_squared_sign=-1)


# -- light-cone radius -------------------------------------------------------

def test_radius_at_origin():
    for H in (0.7, 0.0, -0.7):
        p, _ = make(H=H)
        assert support_radius(0.0, 2.5, p) == 2.5


def test_radius_limit_for_expanding_space():
    p, _ = make(H=0.5, c=2.0)
    t = np.linspace(0, 60, 601)
    r = support_radius(t, 1.0, p)
    assert np.all(np.diff(r) >= 0)
    assert r[-1] == pytest.approx(1.0 + 2.0 / 0.5, rel=1e-12)
    assert np.all(r <= support_radius_cap(t, 1.0, p) * (1 + 1e-15))


def test_radius_small_hubble_limit():
    p0, _ = make(H=0.0, c=1.5)
    assert support_radius(2.0, 1.0, p0) == 4.0
    for H in (1e-4, -1e-4):
        p, _ = make(H=H, c=1.5)
        assert support_radius(2.0, 1.0, p) == pytest.approx(4.0, abs=5e-4)


def test_radius_cap_for_contracting_space_holds_eventually():
    p, _ = make(H=-0.5)
    t = np.linspace(5, 40, 50)
    assert np.all(support_radius(t, 1.0, p) <= support_radius_cap(t, 1.0, p))
    with pytest.raises(ValueError):
        support_radius_cap(1.0, 1.0, make(H=0.0)[0])


# -- closed form -------------------------------------------------------------

def test_closed_form_degenerate_mass():
    p, _ = make()
    assert w_closed_form(3.0, 2.0, 0.5, 0.0, p) == 3.5


def test_closed_form_pure_exponential():
    p, _ = make(c=1.3)
    M = 0.8
    for t in (0.5, 2.0, 5.0):
        assert w_closed_form(t, 1.0, p.c * M, M, p) == pytest.approx(math.exp(p.c * M * t),
                                                                    rel=1e-14)


def test_closed_form_constant_forcing():
    p, _ = make(c=1.2)
    M, h0, t = 0.7, 0.3, 2.0
    got = w_closed_form(t, 0.0, 0.0, M, p, forcing=lambda s: h0)
    x = p.c * M
    expected = p.c**2 * h0 * (math.cosh(x * t) - 1) / x**2
    assert got == pytest.approx(expected, rel=1e-12)
    simpson = p.c**2 * richardson_quadrature(lambda s: np.sinh(x * (t - s)) / x * h0, 0.0, t)
    assert abs(got - simpson) <= 1e-10


def test_closed_form_rejects_negative_M():
    with pytest.raises(ValueError):
        w_closed_form(1.0, 1.0, 1.0, -1.0, make()[0])


# -- comparison ODE ----------------------------------------------------------

def test_linear_reduction_has_no_blowup():
    p, d = imaginary()
    tr = integrate_w(1.0, 2.0, p, d, b_model="zero", t_max=10.0)
    assert tr.blowup_time is None
    for t, w in zip(tr.tgrid[::7], tr.w[::7]):
        ref = w_closed_form(t, 1.0, 2.0, d.M, p)
        assert abs(w - ref) <= 1e-10 * max(1.0, abs(ref))


def test_blowup_detected_with_envelopes():
    p, d = imaginary(H=0.5, n=1, p=2.0)
    M = d.require_M()
    tr = integrate_w(1.0, M, p, d, rtol=1e-12)
    assert tr.blowup_time is not None and math.isfinite(tr.blowup_time)
    assert tr.blowup_time > tr.tgrid[-1]
    assert tr.check("w_ge_w0_exp_cMt").passed
    assert np.all(tr.w >= np.exp(M * tr.tgrid) * (1 - 1e-12))
    assert tr.all_passed
    coarse = integrate_w(1.0, M, p, d, rtol=1e-10)
    assert abs(coarse.blowup_time - tr.blowup_time) <= 1e-6 * tr.blowup_time


def test_blowup_time_golden_value():
    p, d = imaginary(H=0.5, n=1, p=2.0)
    tr = integrate_w(1.0, d.M, p, d)
    assert tr.blowup_time == pytest.approx(3.88700952147, rel=1e-9)


def test_floor_and_secondary_envelopes_for_contracting_space():
    p, d = imaginary(H=-0.3, n=1, p=2.0)
    tr = integrate_w(1.0, 2.0, p, d, t_max=200.0)
    assert tr.t_star is not None and tr.t_star >= 0
    assert tr.check("b_floor").passed
    assert tr.check("b_nonincreasing").passed
    assert tr.check("w_ge_secondary").passed is not False
    assert tr.M1 > tr.M


def test_floor_holds_from_start_for_expanding_space():
    p, _ = imaginary(H=0.4, n=2, p=3.0)
    t = np.linspace(0, 50, 2001)
    assert np.all(b_exact(t, 1.0, p) >= b_floor(t, 1.0, p) * (1 - 1e-13))
    assert threshold_time(1.0, p, 50.0) == 0.0
    assert np.all(np.diff(b_exact(t, 1.0, p)) <= 0)


def test_larger_weight_blows_up_sooner():
    p, d = imaginary(H=0.5)
    times = [integrate_w(1.0, 1.1, p, d, b_model=m).blowup_time for m in ("floor_B", "exact_b")]
    assert times[1] <= times[0]
    scaled = []
    for r in (3.0, 2.0, 1.0):
        scaled.append(integrate_w(1.0, 1.1, p, d, r_support0=r).blowup_time)
    # a smaller initial support makes b pointwise larger
    assert scaled[0] >= scaled[1] >= scaled[2]


def test_hypotheses_enforced():
    p, d = imaginary()
    with pytest.raises(HypothesisViolation):
        integrate_w(-1.0, 1.0, p, d)
    with pytest.raises(HypothesisViolation):
        integrate_w(1.0, 0.0, p, d)
    with pytest.raises(HypothesisViolation):
        integrate_w(1.0, 0.5 * d.M, p, d)
    pm, dm = make(H=0.5, mass=0.0, p=2.0, mass_squared_sign=-1)
    with pytest.raises(HypothesisViolation):
        integrate_w(0.0, 1.0, pm, dm)
    pq, dq = make(H=0.5)
    with pytest.raises(HypothesisViolation):
        integrate_w(1.0, 2.0, pq, dq)
    with pytest.raises(ValueError):
        integrate_w(1.0, 2.0, p, d, b_model="ceiling")


def test_floor_constant_undefined_without_expansion():
    with pytest.raises(ValueError):
        B_constant(1.0, imaginary(H=0.0)[0])


def test_power_law_extrapolation_is_exact_for_power_laws():
    T, a = 2.5, 0.7
    t = 2.4
    w = (T - t) ** -a
    dw = a * (T - t) ** (-a - 1)
    ddw = a * (a + 1) * (T - t) ** (-a - 2)
    assert extrapolate_blowup(t, w, dw, ddw) == pytest.approx(T, rel=1e-14)
    assert math.isnan(extrapolate_blowup(0.0, 1.0, 1.0, 1.0))


def test_separable_benchmark():
    for kappa, delta, w0 in ((1.0, 1.0, 1.0), (0.5, 0.05, 2.0), (3.0, 0.5, 0.1)):
        got, exact = separable_blowup(kappa, delta, w0)
        assert got == pytest.approx(exact, rel=1e-6)
        assert exact == pytest.approx(1 / (delta * kappa * w0**delta))
    with pytest.raises(ValueError):
        separable_blowup(0.0, 1.0, 1.0)


def test_comparison_exponent_reporting():
    p, d = imaginary()
    tr = integrate_w(1.0, 1.1, p, d, epsilon=0.2)
    assert tr.comparison_exponent == pytest.approx(1.1)
    with pytest.raises(KeyError):
        tr.check("missing")
    assert DIVERGENCE_LEVEL == 1e12


@settings(max_examples=15, deadline=None)
@given(w0=st.floats(0.1, 3.0), extra=st.floats(0.0, 2.0), H=st.sampled_from([0.3, 0.6, 1.0]))
def test_primary_envelope_property(w0, extra, H):
    p, d = imaginary(H=H)
    tr = integrate_w(w0, p.c * d.M * w0 + extra, p, d, t_max=30.0)
    assert tr.check("w_ge_w0_exp_cMt").passed


# -- lifespan ----------------------------------------------------------------

def _spec_case():
    p, _ = make(n=3, H=-0.5, lam=1.0, c=1.0)
    return p, DerivedConstants(r0=1.0, Q=1.0)


def _independent_lhs(T):
    # written out for n = 3, mu0 = 0, H = -1/2, Q = 1, r0 = 1, C = C0 = 1, D = 0.1
    return 2.0 * (math.sqrt((math.exp(2 * T) - 1) / 4) * 0.1 + math.sqrt((math.exp(T) - 1) / 2))


def test_lifespan_golden_value():
    p, d = _spec_case()
    cert = lifespan_lower_bound(p, d, D_mu0=0.1, mu0=0.0)
    oracle = brentq(lambda T: _independent_lhs(T) - 0.5, 1e-9, 5.0, xtol=1e-15, rtol=1e-15)
    assert cert.T == pytest.approx(oracle, rel=1e-9)
    assert cert.T == pytest.approx(0.09788016466336558, rel=1e-9)
    assert cert.lhs_at_T <= 0.5 + 1e-12
    tight = lifespan_lower_bound(p, d, D_mu0=0.1, mu0=0.0, rtol=1e-13)
    assert abs(tight.T - cert.T) <= 1e-9 * cert.T
    assert lhs_is_monotone(cert, p, d)
    assert "T = " in cert.as_text()


def test_lifespan_lhs_vanishes_at_origin():
    p, d = _spec_case()
    assert lifespan_lhs(0.0, p, d, 0.1, 0.0) == 0.0
    T = np.linspace(0, 1, 11)
    assert np.allclose(lifespan_lhs(T, p, d, 0.1, 0.0), [_independent_lhs(x) for x in T],
                       rtol=1e-13)


def test_lifespan_unbounded_without_data_or_vacuum():
    p, _ = _spec_case()
    cert = lifespan_lower_bound(p, DerivedConstants(r0=0.0, Q=1.0), D_mu0=0.0, mu0=0.0)
    assert cert.unbounded and math.isinf(cert.T)


def test_lifespan_preconditions():
    p, d = _spec_case()
    with pytest.raises(ValueError):
        lifespan_lower_bound(p, d, 0.1, mu0=1.5)
    with pytest.raises(ValueError):
        lifespan_lower_bound(p, DerivedConstants(r0=1.0, Q=-1.0, M=1.0), 0.1, 0.0)
    pp, _ = make(n=3, H=0.5)
    with pytest.raises(ValueError):
        lifespan_lower_bound(pp, d, 0.1, 0.0)


def test_lifespan_shrinks_with_larger_data():
    p, d = _spec_case()
    Ts = [lifespan_lower_bound(p, d, D, 0.0).T for D in (0.01, 0.1, 1.0)]
    assert Ts[0] > Ts[1] > Ts[2]
