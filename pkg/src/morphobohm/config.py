"""Scenario configuration: INI files read with :mod:`configparser`.

Sections
--------
``[run]``
    ``scenario`` (required): one of :data:`SCENARIOS`.
    ``seed``: integer in ``[0, 2**64)``, default 42.
    ``out``: output directory (optional).
``[grid]``
    ``lower``, ``upper``, ``spacing``: comma-separated, one entry per axis
    (``spacing`` may be a single value). ``spacing > 0``, ``upper > lower``.
    Required for ``qpotential``, ``energy-conservation`` and
    ``relativistic``; optional for ``trajectories``; unused otherwise.
``[constants]``
    ``hbar``, ``m``, ``k_boltz``, ``c``: positive floats, default 1.
``[state]``
    Scenario parameters; see :data:`STATE_SCHEMA` for keys, types,
    defaults and ranges.
``[tolerances]``
    ``<check name> = <float>``; names must be checks of the scenario.

Every key outside the schema is rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError
from .fields import Grid
from .quantum_potential import PhysicalConstants

SCENARIOS = ("fisher", "qpotential", "energy-conservation", "trajectories", "double-slit", "relativistic", "validate")

SEED_MAX = 2**64 - 1
INF = float("inf")


@dataclass(frozen=True)
class Param:
    kind: str  # float | int | str | floats | path
    default: Any = None
    lo: float = -INF
    hi: float = INF
    choices: tuple = ()
    lo_open: bool = False

    def parse(self, key: str, raw: str):
        try:
            if self.kind == "float":
                v = float(raw)
                self._range(key, v)
            elif self.kind == "int":
                v = int(raw)
                self._range(key, v)
            elif self.kind == "floats":
                v = tuple(float(s) for s in raw.split(",") if s.strip())
                if not v:
                    raise ConfigError(f"{key}: empty list")
                for x in v:
                    self._range(key, x)
            else:
                v = raw.strip()
                if self.choices and v not in self.choices:
                    raise ConfigError(f"{key}: {v!r} is not one of {self.choices}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{key}: cannot parse {raw!r} as {self.kind}") from None
        return v

    def _range(self, key, v):
        if not np.isfinite(v):
            raise ConfigError(f"{key}: value must be finite")
        low_bad = v <= self.lo if self.lo_open else v < self.lo
        if low_bad or v > self.hi:
            lb = "(" if self.lo_open else "["
            raise ConfigError(f"{key}: {v} outside {lb}{self.lo}, {self.hi}]")


def _pos(default=None, hi=INF):
    return Param("float", default, 0.0, hi, lo_open=True)


STATE_SCHEMA: dict[str, dict[str, Param]] = {
    "fisher": {
        "family": Param("str", "gaussian", choices=("gaussian", "exponential", "uniform", "tabulated")),
        "params": Param("floats", None),
        "observers": Param("floats", (-1.0, -0.5, 0.0, 0.5, 1.0)),
        "table": Param("path", None),
        "n_samples": Param("int", 1000, 2, 10**7),
        "n_trials": Param("int", 200, 2, 10**6),
    },
    "qpotential": {
        "profile": Param("str", "gaussian", choices=("gaussian", "sech", "file")),
        "sigma": _pos(1.0),
        "center": Param("floats", (0.0,)),
        "field": Param("path", None),
        "mode": Param("str", "paper", choices=("paper", "standard")),
        "gauge_factor": _pos(3.7),
    },
    "energy-conservation": {
        "state": Param("str", "harmonic", choices=("harmonic", "plane_wave")),
        "omega": _pos(1.0),
        "momentum": Param("floats", (1.0,)),
        "dt": _pos(0.1),
        "energy_shift": Param("float", 0.0),
    },
    "trajectories": {
        "x0": Param("float", 0.0),
        "sigma": _pos(0.5),
        "p0": Param("float", 0.0),
        "n_particles": Param("int", 1000, 1, 10**6),
        "dt": _pos(1e-2),
        "t_final": _pos(1.0),
        "record_every": Param("int", 10, 1),
        "n_bins": Param("int", 40, 1, 10**5),
    },
    "double-slit": {
        "d": _pos(4.0),
        "sigma": _pos(0.2),
        "p": _pos(10.0),
        "screen_distance": _pos(20.0),
        "n_particles": Param("int", 10_000, 1, 10**6),
        "dt": _pos(2e-3),
        "n_bins": Param("int", 40, 1, 10**5),
        "grid_spacing": _pos(0.02),
        "record_every": Param("int", 50, 1),
    },
    "relativistic": {
        "sigma": _pos(1.0),
        "energy": Param("float", None),
        "momentum": Param("float", 0.5),
        "q_source": Param("str", "relativistic", choices=("relativistic", "nonrelativistic")),
        "metric": Param("path", None),
    },
    "validate": {
        "filter": Param("str", None),
    },
}

GRID_REQUIRED = {"qpotential", "energy-conservation", "relativistic"}
GRID_ALLOWED = GRID_REQUIRED | {"trajectories"}

CHECKS: dict[str, tuple] = {
    "fisher": ("fisher_symmetric", "fisher_psd", "cramer_rao"),
    "qpotential": ("gauge_invariance", "closed_form_error"),
    "energy-conservation": ("residual_max",),
    "trajectories": ("spreading_law", "equivariance_tv"),
    "double-slit": ("axis_crossings", "tv_distance", "one_slit_q_difference"),
    "relativistic": ("form_equivalence", "determinant_law", "signature_preserved"),
    "validate": (),
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    seed: int = 42
    grid: Optional[Grid] = None
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)
    state: dict = field(default_factory=dict)
    out: Optional[Path] = None
    tolerances: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def with_seed(self, seed: int) -> "ScenarioConfig":
        seed = parse_seed(seed)
        raw = {k: dict(v) for k, v in self.raw.items()}
        raw.setdefault("run", {})["seed"] = str(seed)
        return replace(self, seed=seed, raw=raw)

    def echo(self) -> dict:
        return self.raw


def parse_seed(v) -> int:
    try:
        s = int(str(v).strip())
    except ValueError:
        raise ConfigError(f"seed: {v!r} is not an integer") from None
    if not 0 <= s <= SEED_MAX:
        raise ConfigError(f"seed: {s} outside [0, 2**64)")
    return s


def _reject_unknown(section: str, got, allowed) -> None:
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"[{section}]: unknown key(s) {extra}")


def _parse_grid(sec: dict) -> Grid:
    _reject_unknown("grid", sec, ("lower", "upper", "spacing"))
    missing = [k for k in ("lower", "upper", "spacing") if k not in sec]
    if missing:
        raise ConfigError(f"[grid]: missing {missing}")
    lower = Param("floats").parse("grid.lower", sec["lower"])
    upper = Param("floats").parse("grid.upper", sec["upper"])
    spacing = Param("floats", lo=0.0, lo_open=True).parse("grid.spacing", sec["spacing"])
    if len(lower) != len(upper):
        raise ConfigError("[grid]: lower and upper need the same number of entries")
    if len(spacing) == 1:
        spacing = spacing * len(lower)
    if len(spacing) != len(lower):
        raise ConfigError("[grid]: spacing needs one entry or one per axis")
    if any(u <= lo for lo, u in zip(lower, upper)):
        raise ConfigError("[grid]: upper must exceed lower on every axis")
    try:
        return Grid.from_bounds(lower, upper, spacing)
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from None


def parse_config(text: str, base_dir=".") -> ScenarioConfig:
    """Parse and fully validate an INI config; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {s: dict(cp[s]) for s in cp.sections()}
    _reject_unknown("config", raw, ("run", "grid", "constants", "state", "tolerances"))
    if "run" not in raw or "scenario" not in raw["run"]:
        raise ConfigError("[run] scenario is required")
    run = raw["run"]
    _reject_unknown("run", run, ("scenario", "seed", "out"))
    scenario = run["scenario"].strip()
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    seed = parse_seed(run.get("seed", "42"))
    out = Path(run["out"]) if run.get("out") else None

    grid = None
    if "grid" in raw:
        if scenario not in GRID_ALLOWED:
            raise ConfigError(f"scenario {scenario!r} takes no [grid] section")
        grid = _parse_grid(raw["grid"])
    elif scenario in GRID_REQUIRED:
        raise ConfigError(f"scenario {scenario!r} needs a [grid] section")

    csec = raw.get("constants", {})
    _reject_unknown("constants", csec, ("hbar", "m", "k_boltz", "c"))
    cvals = {k: _pos().parse(f"constants.{k}", v) for k, v in csec.items()}
    consts = PhysicalConstants(**cvals)

    schema = STATE_SCHEMA[scenario]
    ssec = raw.get("state", {})
    _reject_unknown("state", ssec, schema)
    state = {k: (p.parse(f"state.{k}", ssec[k]) if k in ssec else p.default) for k, p in schema.items()}

    tsec = raw.get("tolerances", {})
    _reject_unknown("tolerances", tsec, CHECKS[scenario] if scenario != "validate" else tsec)
    tols = {k: Param("float", lo=0.0).parse(f"tolerances.{k}", v) for k, v in tsec.items()}

    cfg = ScenarioConfig(scenario, seed, grid, consts, state, out, tols, Path(base_dir), raw)
    _check_scenario(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read ``path``; an unreadable file is an ``OSError`` (I/O error)."""
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def _check_scenario(cfg: ScenarioConfig) -> None:
    st = cfg.state
    s = cfg.scenario
    if s == "fisher":
        fam = st["family"]
        if fam == "tabulated":
            if not st["table"]:
                raise ConfigError("family = tabulated needs state.table")
            if st["params"] is None or len(st["params"]) != 1:
                raise ConfigError("tabulated family takes exactly one parameter")
        else:
            need = {"gaussian": 2, "exponential": 1, "uniform": 2}[fam]
            if st["params"] is None or len(st["params"]) != need:
                raise ConfigError(f"family {fam} needs {need} params")
            p = st["params"]
            if fam == "gaussian" and p[1] <= 0:
                raise ConfigError("gaussian sigma must be positive")
            if fam == "exponential" and p[0] <= 0:
                raise ConfigError("exponential rate must be positive")
            if fam == "uniform" and p[1] <= p[0]:
                raise ConfigError("uniform needs a < b")
    elif s == "qpotential":
        if st["profile"] == "file":
            if not st["field"]:
                raise ConfigError("profile = file needs state.field")
        elif len(st["center"]) != cfg.grid.ndim:
            raise ConfigError("state.center needs one entry per grid axis")
    elif s == "energy-conservation":
        if st["state"] == "plane_wave" and len(st["momentum"]) != cfg.grid.ndim:
            raise ConfigError("state.momentum needs one entry per grid axis")
    elif s == "trajectories":
        if cfg.grid is not None and cfg.grid.ndim != 1:
            raise ConfigError("trajectories use a 1-D grid")
        if abs(st["t_final"] / st["dt"] - round(st["t_final"] / st["dt"])) > 1e-9:
            raise ConfigError("t_final must be a whole number of dt steps")
    elif s == "double-slit":
        t_screen = cfg.consts.m * st["screen_distance"] / st["p"]
        if abs(t_screen / st["dt"] - round(t_screen / st["dt"])) > 1e-9:
            raise ConfigError("m * screen_distance / p must be a whole number of dt steps")
    elif s == "relativistic":
        if cfg.grid.ndim < 2:
            raise ConfigError("relativistic grids need time plus at least one space axis")
    elif s == "validate":
        from .validation import SUITES

        f = st["filter"]
        if f is not None and not any(n.startswith(f) for n in SUITES):
            raise ConfigError(f"filter {f!r} matches no module")
