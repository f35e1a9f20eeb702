"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the pytest terminal summary.  Running this file
directly (``python3 tests/test_acceptance.py``) prints them as well.
"""

import math
import time

import numpy as np

import conftest
from conftest import gaussian, make
from dskg.blowup import integrate_w, lhs_is_monotone, lifespan_lower_bound, separable_blowup
from dskg.diagnostics import energy_history, relative_drift
from dskg.mode_ode import solve_mode, verify_mode_bounds
from dskg.nonlinearity import shift_identity_residual
from dskg.params import DerivedConstants
from dskg.propagator import (FieldSeries, Trajectory, direct_solve, duhamel_series,
                             free_trajectory, picard_solve)
from dskg.scattering import compute_asymptotic_state, deviation_series
from dskg.spectral import Field, Grid

SWEEP_SEED = 20240601


def record(k, ok, detail):
    conftest.ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


def zeros(g):
    return Field(g, np.zeros(g.shape))


def sweep(count=100):
    rng = np.random.default_rng(SWEEP_SEED)
    for _ in range(count):
        yield (float(rng.uniform(0, 100)), float(rng.uniform(-1, 1)), float(rng.uniform(0, 4)),
               float(rng.choice([0.5, 1.0, 2.0])))


def test_criterion_01_wronskian():
    start = time.perf_counter()
    t = np.linspace(0, 10, 1001)
    worst = 0.0
    for ksq, H, Q, c in sweep():
        p, _ = make(H=H, c=c)
        ms = solve_mode(ksq, t, p, Q, cache=None)
        worst = max(worst, ms.wronskian_error)
    wall = time.perf_counter() - start
    record(1, worst <= 1e-10 and wall <= 30, f"max |det - 1| = {worst:.3g}, {wall:.1f} s")


def test_criterion_02_mode_bounds():
    t = np.linspace(0, 10, 1001)
    violations = 0
    for ksq, H, Q, c in sweep():
        p, _ = make(H=H, c=c)
        rep = verify_mode_bounds(solve_mode(ksq, t, p, Q), p, Q, tol=1e-8)
        violations += len(rep.bound_violations)
    record(2, violations == 0, f"{violations} bound violations over 100 random modes")


def test_criterion_03_energy_conservation():
    start = time.perf_counter()
    g = Grid(1, 128, 40.0)
    p, d = make(H=0.0, lam=1.0, mass=1.0)
    assert d.r0 == 1.0
    tr = direct_solve(gaussian(g, 0.5), zeros(g), 10.0, 1e-3, "shifted_cubic", p, d,
                      save_every=10)
    drift = relative_drift(energy_history(tr, p, d, "H_nonneg"))
    wall = time.perf_counter() - start
    record(3, drift <= 1e-6 and wall <= 60, f"relative drift {drift:.3g}, {wall:.1f} s")


def test_criterion_04_mild_direct_equivalence():
    g = Grid(1, 64, 20.0)
    p, d = make(H=0.3)
    u0, u1 = gaussian(g, 0.2), zeros(g)
    tr, hist = picard_solve(u0, u1, 1.0, p, d, dt=1e-3)
    ref = direct_solve(u0, u1, 1.0, 1e-3, "shifted_cubic", p, d)
    dist = float(np.max(np.sqrt(np.sum((tr.u - ref.u) ** 2, axis=1) * g.weight)))
    ratio = max(hist.ratios)
    record(4, dist <= 1e-6 and ratio <= 0.5,
           f"L2 distance {dist:.3g}, max contraction ratio {ratio:.3g}")


def test_criterion_05_linear_closed_form():
    g = Grid(1, 32, 2 * np.pi)
    p, d = make(H=0.0, lam=0.0)
    u0 = Field(g, np.cos(3 * g.axis))
    tr = direct_solve(u0, zeros(g), 1.0, 1e-3, "linear", p, d, save_every=1000)
    w = math.sqrt(9 + d.Q)
    err = float(np.max(np.abs(tr.u[-1] - math.cos(w) * u0.samples)))
    u1 = Field(g, np.sin(2 * g.axis))
    tr = direct_solve(zeros(g), u1, 1.0, 1e-3, "linear", p, d, save_every=1000)
    w2 = math.sqrt(4 + d.Q)
    err = max(err, float(np.max(np.abs(tr.u[-1] - math.sin(w2) / w2 * u1.samples))))
    record(5, err <= 1e-10, f"max error {err:.3g}")


def test_criterion_06_blowup():
    got, exact = separable_blowup(1.0, 0.5, 2.0)
    sep = abs(got - exact) / exact
    p, d = make(H=0.5, p=2.0, mass_squared_sign=-1)
    w1 = p.c * d.M
    fine = integrate_w(1.0, w1, p, d, rtol=1e-12)
    coarse = integrate_w(1.0, w1, p, d, rtol=1e-10)
    agree = abs(fine.blowup_time - coarse.blowup_time) / fine.blowup_time
    env = fine.check("w_ge_w0_exp_cMt").passed
    floor = fine.check("b_floor").passed
    ok = sep <= 1e-6 and math.isfinite(fine.blowup_time) and env and floor and agree <= 1e-6
    record(6, ok, f"separable rel err {sep:.2g}; blow-up at {fine.blowup_time:.10g}; "
                  f"envelope {env}, floor {floor}; tolerance agreement {agree:.2g}")


def test_criterion_07_lifespan():
    p, _ = make(n=3, H=-0.5)
    d = DerivedConstants(r0=1.0, Q=1.0)
    cert = lifespan_lower_bound(p, d, D_mu0=0.1, mu0=0.0, rtol=1e-10)
    tight = lifespan_lower_bound(p, d, D_mu0=0.1, mu0=0.0, rtol=1e-13)
    stable = abs(cert.T - tight.T) / tight.T
    mono = lhs_is_monotone(cert, p, d)
    ok = mono and stable <= 1e-10 and cert.lhs_at_T <= 0.5 + 1e-12
    record(7, ok, f"T = {cert.T!r}, LHS(T) = {cert.lhs_at_T:.13g}, "
                  f"root stability {stable:.2g}, monotone {mono}")


def test_criterion_08_scattering_exactness():
    g = Grid(1, 32, 10.0)
    p, d = make(H=0.4)
    t0 = 2.0
    times = np.linspace(0, 5, 501)
    bump = np.where(times < t0, np.sin(np.pi * times / t0) ** 4, 0.0)
    forcing = FieldSeries(g, times, bump[:, None] * np.exp(-g.axis**2)[None, :])
    u0, u1 = gaussian(g, 0.3), Field(g, 0.1 * np.sin(2 * np.pi * g.axis / g.L))
    free = free_trajectory(u0, u1, times, p, d.Q)
    ud, utd = duhamel_series(forcing, p, d.Q)
    tr = Trajectory(g, times, free.u + ud, free.ut + utd, p, "shifted_cubic", derived=d, Q=d.Q)
    ast = compute_asymptotic_state(tr, p, d, forcing=forcing)
    dev_u, _ = deviation_series(tr, ast, mu=1.0)
    worst = float(np.max(dev_u[times > t0]))
    zero = compute_asymptotic_state(free, p, d, forcing=FieldSeries(g, times, 0 * free.u))
    exact = (np.array_equal(zero.u_plus0.samples, u0.samples)
             and np.array_equal(zero.u_plus1.samples, u1.samples))
    record(8, worst <= 1e-9 and exact,
           f"max L2 deviation beyond support {worst:.3g}; zero forcing bit-exact {exact}")


def test_criterion_09_convergence_orders():
    g = Grid(1, 32, 10.0)
    p, d = make(H=0.3)
    u0, u1 = gaussian(g, 0.3), zeros(g)
    ends = [direct_solve(u0, u1, 1.0, dt, "shifted_cubic", p, d).u[-1]
            for dt in (0.04, 0.02, 0.01)]
    ratio = (np.sqrt(np.sum((ends[0] - ends[1]) ** 2))
             / np.sqrt(np.sum((ends[1] - ends[2]) ** 2)))

    L = 20.0
    finals = {}
    pl, dl = make(H=0.3, lam=0.0)
    for N in (16, 32, 64, 256):
        gn = Grid(1, N, L)
        tr = direct_solve(gaussian(gn, 0.3, width=1.5), zeros(gn), 1.0, 1e-3, "linear",
                          pl, dl, dealias=False)
        finals[N] = tr.u[-1]
    ref = finals[256][::256 // 16], finals[256][::256 // 32], finals[256][::256 // 64]
    errs = [float(np.max(np.abs(finals[N] - r))) for N, r in zip((16, 32, 64), ref)]
    gains = [errs[0] / errs[1], errs[1] / max(errs[2], 1e-300)]
    spectral = gains[1] > gains[0] > 4
    ok = abs(ratio - 16) <= 1 and spectral
    record(9, ok, f"Richardson ratio {ratio:.3f}; spatial errors {errs[0]:.2g}, {errs[1]:.2g}, "
                  f"{errs[2]:.2g}")


def test_criterion_10_shift_identity():
    rng = np.random.default_rng(SWEEP_SEED)
    g = Grid(2, 16, 6.0)
    worst = 0.0
    for _ in range(100):
        p, d = make(n=2, lam=float(rng.uniform(0.1, 3)), mass=float(rng.uniform(0.1, 2)))
        phi = Field(g, rng.normal(scale=2.0, size=g.shape))
        res = shift_identity_residual(phi, p, d)
        worst = max(worst, res / (1 + np.max(np.abs(phi.samples)) ** 3))
    g1 = Grid(1, 64, 20.0)
    p, d = make(H=0.4)
    psi0 = gaussian(g1, 0.3)
    a = direct_solve(Field(g1, psi0.samples + d.r0), zeros(g1), 1.0, 1e-3, "unshifted", p, d,
                     dealias=False, save_every=100)
    b = direct_solve(psi0, zeros(g1), 1.0, 1e-3, "shifted_friction", p, d, dealias=False,
                     save_every=100)
    traj = float(np.max(np.abs(a.u - (b.u + d.r0))))
    record(10, worst <= 1e-12 and traj <= 1e-8,
           f"scaled pointwise residual {worst:.3g}; trajectory agreement {traj:.3g}")


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                pass
    for k in sorted(conftest.ACCEPTANCE):
        ok, detail = conftest.ACCEPTANCE[k]
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(0 if all(ok for ok, _ in conftest.ACCEPTANCE.values()) else 1)
