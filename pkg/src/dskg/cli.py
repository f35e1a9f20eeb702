"""Command line entry point: ``dskg <experiment> [--config F] [--out D] [--seed S] [--check]``.

Each experiment writes a JSON run manifest (config echo, version, wall
time, regime warnings, every invariant check with pass/fail) and its
artifacts: a comma-separated time series and binary field snapshots.
``--check`` runs the same computation but writes only the manifest and
returns a nonzero exit code when any check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .blowup import HypothesisViolation, integrate_w, lhs_is_monotone, lifespan_lower_bound
from .config import EXPERIMENTS, Config, ConfigError, load_config, parse_config
from .diagnostics import densities, energy_history, regime_for
from .io import format_timeseries, read_snapshot, write_snapshot
from .mode_ode import solve_mode, tabulate, verify_mode_bounds
from .params import DerivedConstants, derive_constants, validate_regime
from .propagator import (ContractionError, Equation, StateSnapshot, Trajectory, direct_solve,
                         picard_solve)
from .scattering import ScatteringError, compute_asymptotic_state, deviation_series
from .spectral import Field, Grid, irfft, rfft, sobolev_norms_batch

TS_COLUMNS = ("t", "l2", "hmu", "e0", "e0_tilde", "dissipation", "balance_residual",
              "w_integral", "dev_u", "dev_ut")


class Run:
    """Collects checks, results and artifacts of one experiment."""

    def __init__(self, cfg: Config, out: Path, check_only: bool):
        self.cfg = cfg
        self.out = out
        self.check_only = check_only
        self.checks: dict[str, dict] = {}
        self.results: dict = {}
        self.artifacts: list[str] = []
        self.notes: list[str] = []

    def check(self, name: str, passed, value=None, tol=None, note: str = "") -> None:
        self.checks[name] = {"passed": None if passed is None else bool(passed),
                             "value": _jsonable(value), "tol": tol, "note": note}

    def write_text(self, name: str, text: str) -> None:
        if self.check_only:
            return
        path = self.out / name
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        self.artifacts.append(name)

    def write_snapshot(self, name: str, snap: StateSnapshot) -> None:
        if self.check_only:
            return
        write_snapshot(self.out / name, snap)
        self.artifacts.append(name)

    @property
    def passed(self) -> bool:
        return all(c["passed"] is not False for c in self.checks.values())


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


# --------------------------------------------------------------------------
# initial data


def initial_data(cfg: Config, grid: Grid) -> tuple[Field, Field]:
    d = cfg.data
    kind = d["kind"]
    if kind == "file":
        snap = read_snapshot(d["path"])
        if snap.u.grid != grid:
            raise ConfigError(f"snapshot grid {snap.u.grid} differs from configured {grid}")
        return snap.u, snap.ut
    if kind == "gaussian":
        center = d["center"] or (0.0,) * grid.n
        r2 = sum((x - x0) ** 2 for x, x0 in zip(grid.coords, center))
        profile = np.exp(-r2 / d["width"] ** 2)
    elif kind == "mode":
        k = d["k"] or (1.0,) + (0.0,) * (grid.n - 1)
        phase = sum(2 * math.pi * kj / grid.L * x for kj, x in zip(k, grid.coords))
        profile = np.cos(phase)
    else:
        rng = np.random.default_rng(cfg.seed)
        shape = grid.rksq.shape
        coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        coeffs *= np.exp(-grid.rksq / d["spectrum_width"] ** 2)
        profile = irfft(coeffs, grid)
        profile /= np.max(np.abs(profile))
    u0 = d["amplitude"] * profile
    u1 = d["velocity_amplitude"] * profile
    return Field(grid, u0), Field(grid, u1)


def _grid(cfg: Config) -> Grid:
    g = cfg.grid
    return Grid(g["n"], g["N"], g["L"])


# --------------------------------------------------------------------------
# experiments


def _evolve(run: Run, equation: Equation | None = None) -> tuple[Trajectory, DerivedConstants]:
    cfg = run.cfg
    params = cfg.params
    grid = _grid(cfg)
    derived = derive_constants(params)
    equation = Equation(equation or cfg.time["equation"])
    u0, u1 = initial_data(cfg, grid)
    t = cfg.time
    method = t["method"]
    traj = None
    if method in ("picard", "auto"):
        if equation is not Equation.shifted_cubic:
            raise ConfigError("the Picard solver handles the shifted cubic equation only")
        try:
            traj, hist = picard_solve(u0, u1, t["T"], params, derived, tol=t["tol"],
                                      max_iter=t["max_iter"], dt=t["dt"], dealias=t["dealias"])
            run.results["picard_iterations"] = hist.iterations
            run.results["picard_ratios"] = [float(r) for r in hist.ratios]
            run.check("picard_contraction", all(r <= 0.5 for r in hist.ratios),
                      max(hist.ratios, default=0.0), 0.5)
            every = t["save_every"]
            traj = Trajectory(grid, traj.times[::every], traj.u[::every], traj.ut[::every],
                              params, equation, derived=derived, Q=derived.Q)
        except ContractionError as exc:
            if method == "picard":
                raise
            run.notes.append(f"Picard iteration failed ({exc}); fell back to direct_solve")
            run.check("picard_contraction", False, exc.history.ratios[-1:] or None, 0.5,
                      "fell back to direct time stepping")
    if traj is None:
        traj = direct_solve(u0, u1, t["T"], t["dt"], equation, params, derived,
                            save_every=t["save_every"], dealias=t["dealias"])
    run.results["diverged_at"] = traj.diverged_at
    run.check("finite_evolution", traj.diverged_at is None, traj.diverged_at)
    return traj, derived


def _energy_columns(run: Run, traj: Trajectory, derived) -> dict:
    params = run.cfg.params
    cols = {k: np.full(len(traj), np.nan) for k in ("e0", "e0_tilde", "dissipation",
                                                     "balance_residual")}
    if traj.equation not in (Equation.shifted_cubic, Equation.linear) or derived.Q < 0 \
            or len(traj) < 2:
        return cols
    regime = regime_for(params.H)
    if traj.equation is Equation.linear:
        params = replace(params, lam=0.0)
    reps = energy_history(traj, params, derived, regime)
    cols["e0"] = np.array([r.e0_integral for r in reps])
    cols["e0_tilde"] = np.array([r.e0_tilde_integral for r in reps])
    cols["dissipation"] = np.array([r.dissipation_accum for r in reps])
    cols["balance_residual"] = np.array([r.balance_residual for r in reps])
    e_init = reps[0].e0_tilde_integral
    rel = float(np.max(np.abs(cols["balance_residual"]))) / (1.0 + abs(e_init))
    tol = run.cfg.checks["energy_tol"]
    run.check("energy_balance", rel <= tol, rel, tol)
    if params.H == 0:
        drift = float(np.max(np.abs(cols["e0_tilde"] - e_init))) / max(abs(e_init), 1e-300)
        run.check("energy_drift_H0", drift <= tol, drift, tol)
        run.results["energy_drift"] = drift
    run.check("e0_nonnegative", bool(np.all(cols["e0"] >= -1e-12 * (1 + abs(e_init)))),
              float(np.min(cols["e0"])))
    if params.H != 0:
        e0, e0t, ed, edt = densities(traj.u, traj.ut, traj.times, params, derived, regime,
                                     traj.grid)
        run.check("dissipation_nonnegative", bool(np.all(ed >= -1e-12)), float(np.min(ed)))
    return cols


def _timeseries(run: Run, traj: Trajectory, derived, dev=None) -> None:
    grid = traj.grid
    mu = run.cfg.output["mu"]
    uh = rfft(traj.u, grid)
    cols = _energy_columns(run, traj, derived)
    dev_u, dev_ut = dev if dev is not None else (np.full(len(traj), np.nan),) * 2
    rows = zip(traj.times, traj.l2(), sobolev_norms_batch(uh, grid, mu), cols["e0"],
               cols["e0_tilde"], cols["dissipation"], cols["balance_residual"],
               traj.integral(), dev_u, dev_ut)
    if "csv" in run.cfg.output["formats"]:
        run.write_text("timeseries.csv", format_timeseries(TS_COLUMNS, list(rows)))


def _snapshots(run: Run, traj: Trajectory) -> None:
    if "snapshot" not in run.cfg.output["formats"]:
        return
    wanted = run.cfg.output["snapshot_times"] or (float(traj.times[-1]),)
    for tw in wanted:
        i = int(np.argmin(np.abs(traj.times - tw)))
        snap = traj.snapshot(i)
        run.write_snapshot(f"snapshot_t{snap.t:.6g}.dskg", snap)


def exp_evolve(run: Run) -> None:
    traj, derived = _evolve(run)
    _timeseries(run, traj, derived)
    _snapshots(run, traj)
    run.results["final_l2"] = float(traj.l2()[-1])


def exp_energy_audit(run: Run) -> None:
    traj, derived = _evolve(run)
    if derived.Q < 0:
        raise ConfigError(f"energy audit needs Q >= 0, got {derived.Q}")
    _timeseries(run, traj, derived)
    if "energy_balance" not in run.checks:
        raise ConfigError("energy audit needs the shifted_cubic or linear equation")


def exp_scatter(run: Run) -> None:
    traj, derived = _evolve(run, Equation.shifted_cubic)
    sc = run.cfg.section("scatter")
    t_cut = sc["t_cut"] if sc["t_cut"] > 0 else float(traj.times[-1])
    try:
        ast = compute_asymptotic_state(traj, run.cfg.params, derived, t_cut=t_cut,
                                       tail_tol=sc["tail_tol"], dealias=run.cfg.time["dealias"])
    except ScatteringError as exc:
        run.check("scattering_tail", False, note=str(exc))
        _timeseries(run, traj, derived)
        return
    run.check("scattering_tail", True, ast.tail_estimate, sc["tail_tol"])
    dev_u, dev_ut = deviation_series(traj, ast, sc["mu"])
    tail = np.array([ast.tail_bound(t) for t in traj.times])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tail > 0, dev_u / tail, np.nan)
    run.results.update(decay_rate=ast.decay_rate, tail_estimate=ast.tail_estimate,
                       deviation_over_tail=float(np.nanmax(ratio)) if np.any(tail > 0) else None,
                       final_dev_u=float(dev_u[-1]), final_dev_ut=float(dev_ut[-1]))
    _timeseries(run, traj, derived, (dev_u, dev_ut))
    run.write_snapshot("asymptotic.dskg", StateSnapshot(0.0, ast.u_plus0, ast.u_plus1))


def exp_modes(run: Run) -> None:
    cfg = run.cfg
    params = cfg.params
    m = cfg.section("modes")
    Q = m["Q"] if m["Q"] >= 0 else derive_constants(params).Q
    tgrid = np.linspace(0.0, cfg.time["T"], m["samples"])
    sols, worst_w, violations = [], 0.0, 0
    for ksq in m["ksq"]:
        ms = solve_mode(ksq, tgrid, params, Q)
        sols.append(ms)
        rep = verify_mode_bounds(ms, params, Q, tol=cfg.checks["bound_tol"])
        worst_w = max(worst_w, rep.max_wronskian_error)
        violations += len(rep.bound_violations)
    run.write_text("modes.csv", tabulate(sols))
    run.check("mode_bounds", violations == 0, violations, cfg.checks["bound_tol"])
    run.check("wronskian", worst_w <= cfg.checks["wronskian_tol"], worst_w,
              cfg.checks["wronskian_tol"])
    run.results.update(Q=Q, max_wronskian_error=worst_w, bound_violations=violations)


def exp_blowup_ode(run: Run) -> None:
    cfg = run.cfg
    params = cfg.params
    b = cfg.section("blowup")
    derived = derive_constants(params)
    if derived.Q > 0:
        raise ConfigError(f"blow-up needs Q <= 0 (imaginary mass), got Q = {derived.Q}")
    w1 = b["w1"] if b["w1"] >= 0 else params.c * derived.M * b["w0"]
    kw = dict(b_model=b["b_model"], r_support0=b["r_support"], t_max=b["t_max"],
              epsilon=b["epsilon"])
    try:
        wt = integrate_w(b["w0"], w1, params, derived, rtol=b["rtol"], **kw)
    except HypothesisViolation as exc:
        run.check("hypotheses", False, note=str(exc))
        return
    run.check("hypotheses", True)
    coarse = integrate_w(b["w0"], w1, params, derived, rtol=b["rtol"] * 100, **kw)
    run.check("finite_blowup", wt.blowup_time is not None, wt.blowup_time)
    for ch in wt.envelope_checks:
        run.check(f"envelope_{ch.bound_id}", ch.passed, ch.margin, note=ch.note)
    if wt.blowup_time is not None and coarse.blowup_time is not None:
        rel = abs(wt.blowup_time - coarse.blowup_time) / wt.blowup_time
        run.check("tolerance_agreement", rel <= 1e-6, rel, 1e-6)
    run.results.update(blowup_time=wt.blowup_time, M=wt.M, M1=wt.M1, B=wt.B, t_star=wt.t_star,
                       t1=wt.t1, w1=w1, comparison_exponent=wt.comparison_exponent)
    run.write_text("w.csv", format_timeseries(("t", "w", "dw"),
                                              list(zip(wt.tgrid, wt.w, wt.dw))))


def exp_blowup_pde(run: Run) -> None:
    cfg = run.cfg
    params = cfg.params
    grid = _grid(cfg)
    derived = derive_constants(params)
    u0, u1 = initial_data(cfg, grid)
    t = cfg.time
    traj = direct_solve(u0, u1, t["T"], t["dt"], Equation.gauge_variant_blowup, params,
                        derived, save_every=t["save_every"], dealias=t["dealias"], overflow=1e12)
    w = traj.integral()
    run.results.update(diverged_at=traj.diverged_at, final_w=float(w[-1]))
    run.check("w_nondecreasing", bool(np.all(np.diff(w) >= -1e-12 * np.abs(w[1:]))),
              float(np.min(np.diff(w))) if w.size > 1 else None,
              note="qualitative corroboration of the scalar reduction")
    run.check("diverged", True if traj.diverged_at is not None else None, traj.diverged_at,
              note="informational: divergence within the horizon")
    rows = zip(traj.times, traj.l2(), w)
    run.write_text("timeseries.csv", format_timeseries(("t", "l2", "w_integral"), list(rows)))
    _snapshots(run, traj)


def exp_lifespan(run: Run) -> None:
    cfg = run.cfg
    params = cfg.params
    ls = cfg.section("lifespan")
    base = derive_constants(params)
    r0 = ls["r0"] if ls["r0"] >= 0 else base.r0
    Q = ls["Q"] if ls["Q"] >= 0 else base.Q
    derived = DerivedConstants(r0=r0, Q=Q)
    args = (ls["D_mu0"], ls["mu0"], ls["C"], ls["C0"])
    cert = lifespan_lower_bound(params, derived, *args, rtol=ls["rtol"])
    fine = lifespan_lower_bound(params, derived, *args, rtol=ls["rtol"] * 1e-2)
    run.check("lhs_le_half", cert.lhs_at_T <= 0.5 + 1e-12, cert.lhs_at_T, 0.5 + 1e-12)
    run.check("lhs_monotone", lhs_is_monotone(cert, params, derived))
    if not cert.unbounded:
        rel = abs(cert.T - fine.T) / cert.T
        run.check("root_stability", rel <= ls["rtol"], rel, ls["rtol"])
    run.results.update(T=cert.T, lhs_at_T=cert.lhs_at_T, unbounded=cert.unbounded)
    text = cert.as_text().replace(f"params = {params!r}\n", "")
    run.write_text("lifespan.txt", text)


RUNNERS = {"evolve": exp_evolve, "energy_audit": exp_energy_audit, "scatter": exp_scatter,
           "modes": exp_modes, "blowup_ode": exp_blowup_ode, "blowup_pde": exp_blowup_pde,
           "lifespan": exp_lifespan}


def run_experiment(cfg: Config, out=None, check_only: bool = False) -> dict:
    """Run ``cfg`` and write its manifest; returns the manifest dictionary."""
    out = Path(out if out is not None else cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out, check_only)
    regime = validate_regime(cfg.params)
    start = time.perf_counter()
    try:
        RUNNERS[cfg.experiment](run)
    except (ValueError, RuntimeError) as exc:
        raise type(exc)(f"[{cfg.experiment}] {exc}") from exc
    wall = time.perf_counter() - start
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "regime": {"hubble_sign": regime.hubble_sign.value,
                   "nonnegative_H_window": regime.nonnegative_H_window,
                   "negative_H_window": regime.negative_H_window,
                   "mass_type": regime.mass_type.value, "Q_sign": regime.Q_sign.value},
        "warnings": regime.warnings + run.notes,
        "checks": run.checks,
        "all_passed": run.passed,
        "results": {k: _jsonable(v) for k, v in run.results.items()},
        "artifacts": run.artifacts,
        "wall_time_s": wall,
    }
    with open(out / "manifest.json", "w", newline="\n", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dskg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name.replace("_", "-"))
        sp.add_argument("--config", type=Path, help="configuration file")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--seed", type=int, help="seed for random initial data")
        sp.add_argument("--check", action="store_true", help="run invariant checks only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    name = args.command.replace("-", "_")
    try:
        cfg = load_config(args.config, name) if args.config else parse_config("", name)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.sections["experiment"]["seed"] = args.seed
        manifest = run_experiment(cfg, args.out, check_only=args.check)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for key, ch in manifest["checks"].items():
        state = {True: "PASS", False: "FAIL", None: "SKIP"}[ch["passed"]]
        print(f"{state} {key} value={ch['value']}")
    print(f"manifest: {Path(args.out or cfg.output['directory']) / 'manifest.json'}")
    return 0 if manifest["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
