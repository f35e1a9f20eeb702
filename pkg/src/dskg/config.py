"""Line-oriented experiment configuration.

The format is INI-style ``key = value`` lines grouped under ``[section]``
headers and is read with :mod:`configparser`.  Every key must be known;
misspellings are errors rather than silently ignored defaults.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .params import PhysicalParams

EXPERIMENTS = ("evolve", "blowup_ode", "blowup_pde", "lifespan", "scatter", "modes",
               "energy_audit")
EQUATIONS = ("shifted_cubic", "linear", "gauge_variant_blowup", "gauge_invariant",
             "unshifted", "shifted_friction")
DATA_KINDS = ("gaussian", "mode", "file", "random")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _f(s):
    return float(s)


def _i(s):
    return int(s)


def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _b(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _s(s):
    return s.strip()


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "experiment": {"name": (_s, None), "seed": (_i, 0)},
    "params": {"n": (_i, None), "c": (_f, 1.0), "hbar": (_f, 1.0), "H": (_f, 0.0),
               "mass": (_f, 1.0), "lambda": (_f, 1.0), "p": (_f, 3.0),
               "mass_squared_sign": (_i, 1)},
    "grid": {"n": (_i, None), "N": (_i, 128), "L": (_f, 40.0)},
    "time": {"T": (_f, 1.0), "dt": (_f, 1e-3), "tol": (_f, 1e-10), "save_every": (_i, 10),
             "method": (_s, "direct"), "equation": (_s, "shifted_cubic"),
             "max_iter": (_i, 50), "dealias": (_b, True)},
    "data": {"kind": (_s, "gaussian"), "amplitude": (_f, 0.1), "width": (_f, 1.0),
             "center": (_floats, ()), "k": (_floats, ()), "velocity_amplitude": (_f, 0.0),
             "path": (_s, ""), "spectrum_width": (_f, 2.0)},
    "output": {"directory": (_s, "."), "formats": (_s, "csv,snapshot"),
               "snapshot_times": (_floats, ()), "mu": (_f, 1.0)},
    "checks": {"energy_tol": (_f, 1e-6), "bound_tol": (_f, 1e-8),
               "wronskian_tol": (_f, 1e-10)},
    "blowup": {"w0": (_f, 1.0), "w1": (_f, -1.0), "r_support": (_f, 1.0),
               "b_model": (_s, "exact_b"), "t_max": (_f, 100.0), "rtol": (_f, 1e-12),
               "epsilon": (_f, 0.1)},
    "lifespan": {"D_mu0": (_f, 0.1), "mu0": (_f, 0.0), "C": (_f, 1.0), "C0": (_f, 1.0),
                 "r0": (_f, -1.0), "Q": (_f, -1.0), "rtol": (_f, 1e-10)},
    "modes": {"ksq": (_floats, (0.25, 1.0, 4.0, 16.0)), "Q": (_f, -1.0),
              "samples": (_i, 1001)},
    "scatter": {"t_cut": (_f, -1.0), "tail_tol": (_f, 1e-6), "mu": (_f, 1.0)},
}


# experiment-specific defaults, applied before the user's values
PRESETS: dict[str, dict[str, dict]] = {
    "evolve": {},
    "energy_audit": {"time": {"T": 10.0}},
    "scatter": {"params": {"H": 0.5}, "time": {"T": 60.0, "dt": 1e-2, "save_every": 1},
                "data": {"amplitude": 0.05}, "grid": {"N": 64, "L": 40.0}},
    "modes": {"params": {"H": 0.5}, "time": {"T": 10.0}},
    "blowup_ode": {"params": {"H": 0.5, "p": 2.0, "mass_squared_sign": -1}},
    "blowup_pde": {"params": {"H": 0.5, "p": 2.0, "mass_squared_sign": -1},
                   "time": {"T": 10.0, "save_every": 10},
                   "data": {"amplitude": 1.0, "velocity_amplitude": 1.1},
                   "grid": {"N": 128, "L": 60.0}},
    "lifespan": {"params": {"n": 3, "H": -0.5}, "lifespan": {"Q": 1.0, "r0": 1.0}},
}


@dataclass
class Config:
    experiment: str
    params: PhysicalParams
    grid: dict
    time: dict
    data: dict
    output: dict
    checks: dict
    sections: dict = field(default_factory=dict)
    seed: int = 0
    source: str = ""

    def section(self, name: str) -> dict:
        return self.sections[name]

    def echo(self) -> dict:
        """Plain-dict view of every section, used in run manifests."""
        return {k: dict(v) for k, v in self.sections.items()}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            if k == key:
                return no
    return None


def parse_config(text: str, experiment: str | None = None) -> Config:
    """Parse and validate configuration text.

    ``experiment`` overrides (or supplies) ``[experiment] name``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected key = value)", line) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]",
                          exc.lineno) from None

    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]", _line_of(text, name))
    exp_name = experiment or (cp.get("experiment", "name", fallback=None)
                              if cp.has_section("experiment") else None)
    if exp_name is None:
        raise ConfigError("no experiment named (set [experiment] name or pass a subcommand)")
    exp_name = exp_name.strip().replace("-", "_")
    if exp_name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp_name!r}; expected one of {EXPERIMENTS}")
    preset = PRESETS[exp_name]

    sections: dict[str, dict] = {}
    for name, keys in SCHEMA.items():
        values = {k: d for k, (_, d) in keys.items()}
        values.update(preset.get(name, {}))
        if cp.has_section(name):
            for key, raw in cp.items(name):
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in [{name}]", _line_of(text, name, key))
                try:
                    values[key] = keys[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {name}.{key}: {exc}",
                                      _line_of(text, name, key)) from None
        sections[name] = values

    name = exp_name
    sections["experiment"]["name"] = name

    pn, gn = sections["params"]["n"], sections["grid"]["n"]
    if pn is not None and gn is not None and pn != gn:
        raise ConfigError(f"params.n = {pn} and grid.n = {gn} disagree")
    n = pn or gn or 1
    sections["params"]["n"] = sections["grid"]["n"] = n

    pv = sections["params"]
    try:
        params = PhysicalParams(n=n, c=pv["c"], hbar=pv["hbar"], H=pv["H"], mass=pv["mass"],
                                lam=pv["lambda"], p=pv["p"],
                                mass_squared_sign=pv["mass_squared_sign"])
    except ValueError as exc:
        raise ConfigError(f"[params] violates a precondition: {exc}") from None

    _validate(sections, name)
    return Config(experiment=name, params=params, grid=sections["grid"], time=sections["time"],
                  data=sections["data"], output=sections["output"], checks=sections["checks"],
                  sections=sections, seed=sections["experiment"]["seed"], source=text)


def _validate(s: dict, name: str) -> None:
    from .spectral import Grid

    g = s["grid"]
    try:
        Grid(g["n"], g["N"], g["L"])
    except ValueError as exc:
        raise ConfigError(f"[grid] violates a precondition: {exc}") from None
    t = s["time"]
    for key in ("T", "dt", "tol"):
        if not t[key] > 0:
            raise ConfigError(f"time.{key} must be positive, got {t[key]}")
    if t["save_every"] < 1:
        raise ConfigError("time.save_every must be at least 1")
    if t["method"] not in ("direct", "picard", "auto"):
        raise ConfigError(f"time.method must be direct, picard or auto, got {t['method']!r}")
    if t["equation"] not in EQUATIONS:
        raise ConfigError(f"time.equation must be one of {EQUATIONS}")
    d = s["data"]
    if d["kind"] not in DATA_KINDS:
        raise ConfigError(f"data.kind must be one of {DATA_KINDS}, got {d['kind']!r}")
    if d["kind"] == "file":
        if not d["path"] or not Path(d["path"]).is_file():
            raise ConfigError(f"data.path {d['path']!r} does not name an existing file")
    if d["kind"] == "gaussian" and not d["width"] > 0:
        raise ConfigError("data.width must be positive")
    if d["center"] and len(d["center"]) != g["n"]:
        raise ConfigError(f"data.center needs {g['n']} entries")
    if d["k"] and len(d["k"]) != g["n"]:
        raise ConfigError(f"data.k needs {g['n']} entries")
    fmts = {f.strip() for f in s["output"]["formats"].split(",") if f.strip()}
    if not fmts <= {"csv", "snapshot"}:
        raise ConfigError(f"output.formats accepts csv and snapshot, got {sorted(fmts)}")
    if s["blowup"]["b_model"] not in ("exact_b", "floor_B", "zero"):
        raise ConfigError("blowup.b_model must be exact_b, floor_B or zero")


def load_config(path, experiment: str | None = None) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"), experiment)
