"""Scenario runners: compose the numerical modules, write outputs, report checks."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import bohmian, entropy_fisher as ef, geometrodynamics as gd, io
from . import quantum_potential as qp
from .config import CHECKS, ScenarioConfig
from .errors import ConfigError
from .fields import FieldSeries, Grid, ScalarField
from .validation import Check, gaussian_estimator, run_validation

REPORT_NAME = "report.json"


@dataclass
class RunReport:
    scenario: str
    seed: int
    checks: list
    manifest: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def counts(self) -> dict:
        n_pass = sum(c.passed for c in self.checks)
        return {"passed": n_pass, "failed": len(self.checks) - n_pass}

    def to_dict(self, include_wall_time: bool = True) -> dict:
        d = {
            "scenario": self.scenario,
            "seed": self.seed,
            "checks": [c.as_dict() for c in self.checks],
            "summary": self.counts,
            "manifest": self.manifest,
            "config": self.config,
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        return d


class _Outputs:
    """Collects written files for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list = []

    def field(self, f: ScalarField, name: str) -> None:
        self.files += io.write_field(f, self.out / f"{name}.csv")

    def add(self, path: Path) -> None:
        self.files.append(Path(path))

    def manifest(self) -> dict:
        return {p.relative_to(self.out).as_posix(): io.sha256(p) for p in sorted(self.files)}


def _check(cfg: ScenarioConfig, name: str, value: float, tol: float, op: str = "<=") -> Check:
    return Check(name, float(value), float(cfg.tolerances.get(name, tol)), op, cfg.scenario)


# ---------------------------------------------------------------------------


def _tabulated_family(path: Path):
    cols = io.read_csv_columns(path)
    if "theta" not in cols:
        raise ConfigError(f"{path}: needs a 'theta' column")
    theta = cols.pop("theta")
    if theta.size < 4 or np.any(np.diff(theta) <= 0):
        raise ConfigError(f"{path}: theta must be strictly increasing with at least 4 rows")
    labels = sorted(cols)
    if not labels:
        raise ConfigError(f"{path}: no W columns")
    splines = []
    for lab in labels:
        w = cols[lab]
        if np.any(w <= 0):
            raise ConfigError(f"{path}: column {lab} has non-positive counts")
        splines.append(CubicSpline(theta, np.log(w)))
    W = [(lambda th, s=s: float(np.exp(s(th[0])))) for s in splines]
    dlogW = [(lambda th, s=s: np.array([float(s(th[0], 1))])) for s in splines]
    return ef.MicrostateFamily(W, dlogW, labels), (theta[0], theta[-1])


def _point_family(dist, observers) -> ef.MicrostateFamily:
    """Observer ``j`` at position ``x_j`` counts ``W_j = 1 / rho(x_j; theta)``."""
    W = [(lambda th, x=x: float(1.0 / dist.density(np.array([x]), th)[0])) for x in observers]
    return ef.MicrostateFamily(W, labels=[f"x={io.fmt(x)}" for x in observers])


def run_fisher(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    theta = np.array(st["params"], dtype=float)
    record = {"family": st["family"], "theta": theta.tolist()}
    if st["family"] == "tabulated":
        fam, (lo, hi) = _tabulated_family(cfg.resolve(st["table"]))
        if not lo <= theta[0] <= hi:
            raise ConfigError(f"theta {theta[0]} outside the table range [{lo}, {hi}]")
    else:
        dist = ef.DISTRIBUTIONS[st["family"]]()
        fam = _point_family(dist, st["observers"])
    s = ef.entropy_vector(fam, theta, cfg.consts.k_boltz)
    F = ef.fisher_matrix(fam, theta).f
    record.update(observers=list(fam.labels), entropy=s.s.tolist(), observer_fisher=F.tolist())
    checks = [
        _check(cfg, "fisher_symmetric", np.abs(F - F.T).max(), 1e-12),
        _check(cfg, "fisher_psd", -np.linalg.eigvalsh(F)[0] / max(np.abs(F).max(), 1.0), 1e-12),
    ]
    if st["family"] in ("gaussian", "exponential"):
        Fs = ef.score_fisher_oracle(dist, theta).f
        est = gaussian_estimator if st["family"] == "gaussian" else (lambda x: np.array([1.0 / x.mean()]))
        n, T = st["n_samples"], st["n_trials"]
        Sig = ef.mc_estimator_covariance(dist, theta, est, n, T, cfg.seed)
        gap = ef.cramer_rao_gap(Fs * n, Sig)
        record.update(score_fisher=Fs.tolist(), estimator_covariance=Sig.tolist(), cramer_rao_gap=gap)
        checks.append(_check(cfg, "cramer_rao", -gap / ef.covariance_stderr(Sig, T), 3.0))
    path = out.out / "fisher.json"
    io.dump_json(record, path)
    out.add(path)
    return checks


def _profile(cfg: ScenarioConfig) -> ScalarField:
    st = cfg.state
    g = cfg.grid
    if st["profile"] == "file":
        W = io.read_field(cfg.resolve(st["field"]))
        if not W.grid.same_as(g):
            raise ConfigError("field file grid differs from [grid]")
        return W
    r2 = sum((m - c) ** 2 for m, c in zip(g.mesh(), st["center"]))
    s = st["sigma"]
    if st["profile"] == "gaussian":
        w = np.exp(-r2 / (2 * s**2))
    else:
        w = 1.0 / np.cosh(np.sqrt(r2) / s)
    return ScalarField(w, g, "W")


def gaussian_q_exact(grid: Grid, center, sigma: float, consts, mode: str) -> np.ndarray:
    """Closed-form potential of ``W = exp(-|x - c|^2 / 2 sigma^2)``."""
    r2 = sum((m - c) ** 2 for m, c in zip(grid.mesh(), center))
    d = grid.ndim
    if mode == "paper":
        return (d / sigma**2 - r2 / (2 * sigma**4)) / consts.m
    return consts.hbar**2 / (2 * consts.m) * (d / (2 * sigma**2) - r2 / (4 * sigma**4))


def gauge_floor(grid: Grid) -> float:
    """Rounding floor of the second-difference stencil, relative to max|Q|."""
    return max(1e-12, 16 * np.finfo(float).eps / min(grid.spacing) ** 2)


def run_qpotential(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    W = _profile(cfg)
    res = qp.quantum_potential_w(W, cfg.consts, st["mode"])
    Q = res.scalar
    Q2 = qp.quantum_potential_w(W.with_values(st["gauge_factor"] * W.values), cfg.consts, st["mode"]).scalar
    scale = max(1.0, np.abs(Q.values).max())
    gauge = np.abs(Q2.values - Q.values).max() / scale
    out.field(W.with_values(W.values, "W"), "W")
    out.field(Q, "Q")
    for i, b in enumerate(qp.weyl_vector(W)):
        out.field(W.with_values(b, f"B{i}"), f"B{i}")
    out.field(qp.eq4_condition_residual(W), "eq4_residual")
    checks = [_check(cfg, "gauge_invariance", gauge, gauge_floor(W.grid))]
    if st["profile"] == "gaussian":
        exact = gaussian_q_exact(W.grid, st["center"], st["sigma"], cfg.consts, st["mode"])
        err = np.abs(Q.values - exact)[W.grid.interior()].max()
        checks.append(_check(cfg, "closed_form_error", err, 1e-3))
    return checks


def run_energy(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    g = cfg.grid
    times = [0.0, st["dt"]]
    if st["state"] == "harmonic":
        rho, V, E = qp.harmonic_ground_state(g, cfg.consts, st["omega"])
        S = qp.stationary_phase(g, E + st["energy_shift"], times)
        tol = 1e-3
    else:
        rho = ScalarField(np.ones(g.shape), g, "rho")
        V = ScalarField(np.zeros(g.shape), g, "V")
        S = qp.plane_wave_phase(g, st["momentum"], cfg.consts, times)
        shift = st["energy_shift"] * np.asarray(times).reshape((-1,) + (1,) * g.ndim)
        S = FieldSeries(S.values - shift, g, S.t0, S.dt, "S")
        tol = 1e-12
    r = qp.hj_energy_residual(S, rho, V, cfg.consts, "standard")
    out.field(rho, "rho")
    out.field(r, "residual")
    return [_check(cfg, "residual_max", np.abs(r.values)[g.interior()].max(), tol)]


def run_trajectories(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    packet = bohmian.GaussianPacket(st["x0"], st["sigma"], st["p0"], cfg.consts)
    T = st["t_final"]
    g = cfg.grid
    if g is None:
        half = 8.0 * st["sigma"]
        g = Grid.from_bounds(st["x0"] - half, st["x0"] + half, st["sigma"] / 500.0)
    rho0 = ScalarField(np.abs(packet.psi(g.axis(0), 0.0)) ** 2, g, "rho0")
    x0 = bohmian.sample_positions(rho0, st["n_particles"], cfg.seed)
    ens = bohmian.bohmian_trajectories(
        None, x0, st["dt"], T, cfg.consts,
        grad_S=lambda y, t: bohmian.phase_gradient(packet, y, t),
        record_every=st["record_every"], seed=cfg.seed,
    )
    exact = packet.exact_trajectory(x0[:, 0], T)
    centre = st["x0"] + st["p0"] / cfg.consts.m * T
    rel = np.abs(ens.final[:, 0] - exact) / np.maximum(np.abs(exact - centre), packet.width(T))
    w = packet.width(T)
    edges = np.linspace(centre - 4 * w, centre + 4 * w, st["n_bins"] + 1)
    counts, _ = np.histogram(ens.final[:, 0], edges)
    expected = bohmian._bin_probabilities(packet, edges, T)
    tv = 0.5 * np.abs(counts / max(counts.sum(), 1) - expected / expected.sum()).sum()
    out.add(io.write_trajectories(ens, out.out / "trajectories.csv"))
    out.add(io.write_histogram(0.5 * (edges[1:] + edges[:-1]), counts, out.out / "histogram.csv"))
    return [
        _check(cfg, "spreading_law", rel.max(), 1e-3),
        _check(cfg, "equivariance_tv", tv, 0.05),
    ]


def run_double_slit(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    r = bohmian.double_slit_scenario(
        d=st["d"], sigma=st["sigma"], p=st["p"], screen_distance=st["screen_distance"],
        n_particles=st["n_particles"], seed=cfg.seed, consts=cfg.consts, dt=st["dt"],
        n_bins=st["n_bins"], grid_spacing=st["grid_spacing"], record_every=st["record_every"],
    )
    out.field(r.rho, "rho")
    out.field(r.Q, "Q")
    out.field(r.Q_one_slit.with_values(r.Q_one_slit.values, "Q_one_slit"), "Q_one_slit")
    out.add(io.write_trajectories(r.ensemble, out.out / "trajectories.csv"))
    out.add(io.write_histogram(r.bin_centers, r.counts, out.out / "histogram.csv"))
    overlap = np.abs(r.grid.axis(0)) < st["d"] / 2
    qdiff = np.abs(r.Q.values - r.Q_one_slit.values)[overlap].max()
    return [
        _check(cfg, "axis_crossings", r.axis_crossings, 0.0),
        _check(cfg, "tv_distance", r.tv_distance, 0.05),
        _check(cfg, "one_slit_q_difference", qdiff, 0.0, ">"),
    ]


def run_relativistic(cfg: ScenarioConfig, out: _Outputs) -> list:
    st = cfg.state
    g = cfg.grid
    c = cfg.consts
    mesh = g.mesh()
    r2 = sum(m**2 for m in mesh[1:])
    amp = ScalarField(np.exp(-r2 / (2 * st["sigma"] ** 2)), g, "abs_psi")
    if st["metric"]:
        metric = io.load_metric(cfg.resolve(st["metric"]))
        if not metric.grid.same_as(g):
            raise ConfigError("metric grid differs from [grid]")
    else:
        metric = gd.minkowski(g, c.c)

    if st["q_source"] == "relativistic":
        Q = gd.relativistic_quantum_potential(amp, c, None if not st["metric"] else metric)
    else:
        sub = Grid(g.origin[1:], g.spacing[1:], g.shape[1:])
        slices = [
            qp.quantum_potential_w(ScalarField(amp.values[i] ** 2, sub), c, "paper").scalar.values
            for i in range(g.shape[0])
        ]
        Q = amp.with_values(np.array(slices), "Q")
    p = st["momentum"]
    E = st["energy"] if st["energy"] is not None else c.c * np.sqrt(p**2 + (c.m * c.c) ** 2)
    S = ScalarField(E * mesh[0] - p * mesh[1], g, "S")

    M = gd.quantum_mass(Q, c.m)
    gt = gd.conformal_metric(metric, Q, c.m)
    r0 = gd.kg_hj_residual(metric, S, Q, c, "original")
    r1 = gd.kg_hj_residual(metric, S, Q, c, "conformal")
    disc = gd.kg_form_discrepancy(metric, S, Q, c).max() / max(1.0, np.abs(r0.values).max())
    det = np.abs(gt.det() / (np.exp(g.ndim * Q.values) * metric.det()) - 1.0).max()
    sig = int(not (metric.has_lorentzian_signature() and gt.has_lorentzian_signature()))

    out.field(Q, "Q")
    out.field(M.M_squared, "M2")
    out.field(r0.with_values(r0.values, "residual_original"), "residual_original")
    out.field(r1.with_values(r1.values, "residual_conformal"), "residual_conformal")
    return [
        _check(cfg, "form_equivalence", disc, 1e-12),
        _check(cfg, "determinant_law", det, 1e-10),
        _check(cfg, "signature_preserved", sig, 0.0),
    ]


def run_validate(cfg: ScenarioConfig, out: _Outputs) -> list:
    return run_validation(cfg.state.get("filter"), cfg.tolerances)


RUNNERS = {
    "fisher": run_fisher,
    "qpotential": run_qpotential,
    "energy-conservation": run_energy,
    "trajectories": run_trajectories,
    "double-slit": run_double_slit,
    "relativistic": run_relativistic,
    "validate": run_validate,
}
assert set(RUNNERS) == set(CHECKS)


def run_scenario(cfg: ScenarioConfig, out_dir) -> RunReport:
    """Run ``cfg`` writing into ``out_dir``; returns the report.

    ``report.json`` (written last, without wall time so reruns are
    byte-identical) lists every other emitted file with its SHA-256.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs = _Outputs(out_dir)
    checks = RUNNERS[cfg.scenario](cfg, outputs)
    report = RunReport(cfg.scenario, cfg.seed, checks, outputs.manifest(), cfg.echo())
    report.wall_time = time.perf_counter() - t0
    io.dump_json(report.to_dict(include_wall_time=False), out_dir / REPORT_NAME)
    return report


def verify_manifest(out_dir) -> list:
    """Files listed in ``report.json`` that are missing or changed."""
    import json

    out_dir = Path(out_dir)
    report = json.loads((out_dir / REPORT_NAME).read_text())
    bad = []
    for rel, digest in sorted(report["manifest"].items()):
        p = out_dir / rel
        if not p.is_file():
            bad.append(f"missing: {rel}")
        elif io.sha256(p) != digest:
            bad.append(f"changed: {rel}")
    return bad
