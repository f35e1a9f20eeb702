import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make
from dskg.mode_ode import (ModeCache, a_tilde, kernel_coeffs, mode_table, solve_mode, tabulate,
                           verify_mode_bounds)
from oracles import bessel_pair, dop853_pair


def test_coefficient_values():
    p, _ = make(H=1.0)
    assert a_tilde(0.0, 3.0, p, 2.0) == 5.0
    assert a_tilde(math.log(2), 4.0, p, 1.0) == pytest.approx(2.0, rel=1e-15)
    p0, _ = make(H=0.0, c=2.0)
    vals = [a_tilde(t, 1.5, p0, 0.5) for t in (0, 1, 10)]
    assert vals == [8.0, 8.0, 8.0]


def test_closed_form_half_period():
    p, _ = make(H=0.0)
    ms = solve_mode(4.0, np.array([0.0, math.pi / 2]), p, 0.0)
    assert ms.rho0[-1] == pytest.approx(-1.0, abs=1e-15)
    assert ms.rho1[-1] == pytest.approx(0.0, abs=1e-15)


def test_free_particle():
    p, _ = make(H=0.0)
    t = np.linspace(0, 3, 7)
    ms = solve_mode(0.0, t, p, 0.0)
    assert np.all(ms.rho0 == 1.0)
    assert np.allclose(ms.rho1, t, rtol=0, atol=0)


def test_initial_conditions():
    p, _ = make(H=0.7)
    ms = solve_mode(2.0, np.linspace(0, 1, 5), p, 1.0)
    assert (ms.rho0[0], ms.drho0[0], ms.rho1[0], ms.drho1[0]) == (1.0, 0.0, 0.0, 1.0)


def test_two_oracles_agree_with_integrator():
    p, _ = make(H=1.0)
    t = np.array([0.0, 1.0])
    ms = solve_mode(1.0, t, p, 1.0)
    bes = bessel_pair(1.0, 1.0, 1.0, 1.0, 1.0)
    dop = [x[-1] for x in dop853_pair(1.0, t, 1.0, 1.0, 1.0)]
    got = (ms.rho0[-1], ms.rho1[-1], ms.drho0[-1], ms.drho1[-1])
    for a, b, c in zip(got, bes, dop):
        assert abs(a - b) <= 1e-10
        assert abs(a - c) <= 1e-10
        assert abs(b - c) <= 1e-10


@pytest.mark.parametrize("ksq,H,Q,c", [(4.0, -0.5, 0.0, 1.0), (0.25, 0.3, 2.0, 2.0),
                                       (25.0, -1.0, 0.5, 0.5), (9.0, 0.8, 0.0, 1.0)])
def test_bessel_oracle_sweep(ksq, H, Q, c):
    p, _ = make(H=H, c=c)
    t = np.linspace(0, 2, 5)
    ms = solve_mode(ksq, t, p, Q)
    for i in (2, 4):
        ref = bessel_pair(ksq, t[i], c, H, Q)
        got = (ms.rho0[i], ms.rho1[i], ms.drho0[i], ms.drho1[i])
        scale = max(1.0, max(abs(v) for v in ref))
        assert max(abs(a - b) for a, b in zip(got, ref)) <= 1e-10 * scale


def test_dop853_agreement_long_horizon():
    p, _ = make(H=-0.3)
    t = np.linspace(0, 10, 201)
    ms = solve_mode(10.0, t, p, 1.0)
    ref = dop853_pair(10.0, t, 1.0, -0.3, 1.0)
    assert np.max(np.abs(ms.rho0 - ref[0])) < 1e-9
    assert np.max(np.abs(ms.drho1 - ref[3])) < 1e-8


def test_kernel_symbol_identities():
    p, _ = make(H=0.4)
    t = np.linspace(0, 2, 21)
    ms = solve_mode(3.0, t, p, 1.5)
    for tt in t[::5]:
        r12, r22 = kernel_coeffs(tt, tt, ms, ms)
        assert r12 == pytest.approx(0.0, abs=1e-15)
        assert r22 == pytest.approx(1.0, abs=1e-12)
        r12, r22 = kernel_coeffs(tt, 0.0, ms, ms)
        i = ms.index(tt)
        assert r12 == ms.rho1[i] and r22 == ms.drho1[i]


def test_kernel_angle_subtraction_at_zero_hubble():
    p, _ = make(H=0.0)
    t = np.linspace(0, 3, 31)
    ms = solve_mode(2.0, t, p, 0.25)
    w = math.sqrt(2.25)
    for tt in t[::3]:
        for s in t[: ms.index(tt) + 1 : 2]:
            r12, _ = kernel_coeffs(tt, s, ms, ms)
            assert abs(r12 - math.sin(w * (tt - s)) / w) <= 1e-12


def test_kernel_rejects_mismatched_problems():
    p, _ = make(H=0.2)
    t = np.linspace(0, 1, 3)
    with pytest.raises(ValueError):
        kernel_coeffs(1.0, 0.0, solve_mode(1.0, t, p, 1.0), solve_mode(2.0, t, p, 1.0))


def test_non_monotone_grid_rejected():
    p, _ = make(H=0.2)
    with pytest.raises(ValueError):
        solve_mode(1.0, [0.0, 1.0, 0.5], p, 1.0)


@pytest.mark.parametrize("H", [0.5, -0.5, 0.0])
def test_amplitude_bounds(H):
    p, _ = make(H=H)
    t = np.linspace(0, 10, 1001)
    for ksq in (0.25, 1, 4, 16):
        rep = verify_mode_bounds(solve_mode(ksq, t, p, 1.0), p, 1.0)
        assert rep.all_passed, rep.bound_violations[:3]
        assert rep.max_wronskian_error < 1e-12


def test_bounds_refuse_negative_coefficient():
    p, _ = make(H=0.5)
    ms = solve_mode(1.0, np.linspace(0, 5, 11), p, -1.0)
    with pytest.raises(ValueError):
        verify_mode_bounds(ms, p, -1.0)


def test_bounds_detect_a_planted_violation():
    p, _ = make(H=0.5)
    ms = solve_mode(1.0, np.linspace(0, 5, 11), p, 1.0)
    ms.rho1[5] = 10.0
    rep = verify_mode_bounds(ms, p, 1.0)
    assert not rep.all_passed
    assert any(v[0] == "decreasing/rho1" for v in rep.bound_violations)


def test_negative_coefficient_grows_hyperbolically():
    p, _ = make(H=0.0)
    ms = solve_mode(0.0, np.array([0.0, 2.0]), p, -1.0)
    assert ms.rho0[-1] == pytest.approx(math.cosh(2.0), rel=1e-14)
    p1, _ = make(H=0.5)
    ms = solve_mode(0.01, np.linspace(0, 3, 7), p1, -1.0)
    ref = dop853_pair(0.01, ms.tgrid, 1.0, 0.5, -1.0)
    assert np.allclose(ms.rho0, ref[0], rtol=1e-10)


def test_time_reversal_parity_at_zero_hubble():
    p, _ = make(H=0.0)
    fwd = solve_mode(3.0, np.array([0.0, 1.3]), p, 1.0)
    bwd = solve_mode(3.0, np.array([-1.3, 0.0]), p, 1.0)
    # re-based pair from -1.3 to 0 equals the pair from 0 to 1.3 for constant coefficients
    assert bwd.rho0[-1] == pytest.approx(fwd.rho0[-1], rel=1e-14)
    assert bwd.rho1[-1] == pytest.approx(fwd.rho1[-1], rel=1e-14)


def test_stored_derivatives_are_second_order_consistent():
    p, _ = make(H=0.6)
    errs = []
    for nt in (201, 401, 801):
        t = np.linspace(0, 2, nt)
        ms = solve_mode(5.0, t, p, 1.0)
        fd = (ms.rho0[2:] - ms.rho0[:-2]) / (t[2:] - t[:-2])
        errs.append(np.max(np.abs(fd - ms.drho0[1:-1])))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_rebased_grid_uses_absolute_time():
    p, _ = make(H=0.5)
    full = solve_mode(2.0, np.linspace(0, 2, 3), p, 1.0)
    part = solve_mode(2.0, np.array([1.0, 2.0]), p, 1.0)
    # re-basing: combine the re-based pair with the state at t = 1
    u1, v1 = full.rho0[1], full.drho0[1]
    assert part.rho0[-1] * u1 + part.rho1[-1] * v1 == pytest.approx(full.rho0[-1], abs=1e-12)


def test_cache_hits_and_thread_safety():
    cache = ModeCache(maxsize=8)
    t = np.linspace(0, 1, 11)
    first = mode_table([1.0, 2.0], t, 1.0, 0.3, 1.0, cache=cache)
    second = mode_table([2.0, 1.0], t, 1.0, 0.3, 1.0, cache=cache)
    assert cache.hits == 2
    assert np.array_equal(first[:, 0], second[:, 1])
    errors = []

    def work(k):
        try:
            mode_table([float(k)], t, 1.0, 0.3, 1.0, cache=cache)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(k,)) for k in range(20)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert not errors
    assert len(cache._data) <= 8


def test_tabulation_format():
    p, _ = make(H=0.2)
    text = tabulate([solve_mode(1.0, np.linspace(0, 1, 3), p, 1.0)])
    lines = text.splitlines()
    assert lines[0] == "ksq,t,rho0,rho1,drho0,drho1,wronskian_error"
    assert len(lines) == 4
    assert float(lines[1].split(",")[2]) == 1.0


@settings(max_examples=25, deadline=None)
@given(ksq=st.floats(0, 100), H=st.floats(-1, 1), Q=st.floats(0, 4),
       c=st.sampled_from([0.5, 1.0, 2.0]))
def test_wronskian_property(ksq, H, Q, c):
    p, _ = make(H=H, c=c)
    ms = solve_mode(ksq, np.linspace(0, 10, 201), p, Q, cache=None)
    assert ms.wronskian_error <= 1e-10
