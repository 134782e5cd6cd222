"""Invariant suite behind ``morphobohm validate``.

Every check returns a :class:`Check` row. ``value`` is compared with
``tolerance`` using ``op``; tolerances can be overridden by name (glob
patterns allowed).
"""

from __future__ import annotations

import fnmatch
import operator
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from . import bohmian, entropy_fisher as ef, geometrodynamics as gd, morphogenetic as mg
from . import quantum_potential as qp
from .fields import Grid, ScalarField

OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    op: str = "<="
    module: str = ""

    def __post_init__(self):
        self.value = float(self.value)
        self.tolerance = float(self.tolerance)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and OPS[self.op](self.value, self.tolerance)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def apply_overrides(checks: list, overrides: Optional[dict]) -> list:
    for c in checks:
        for pattern, tol in (overrides or {}).items():
            if fnmatch.fnmatchcase(c.name, pattern):
                c.tolerance = float(tol)
    return checks


def convergence_ratio(err: Callable[[float], float], h: float) -> float:
    """``err(h) / err(h/2)``; about 4 for a second-order scheme."""
    return err(h) / err(h / 2.0)


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(np.abs(ys)), 1)[0])


# ---------------------------------------------------------------------------
# morphogenetic


def random_full_rank(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    while True:
        J = rng.standard_normal((m, n))
        s = np.linalg.svd(J, compute_uv=False)
        if (s[0] / s[-1]) ** 2 < 1e8:
            return J


def morphogenetic_checks(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    mp = proj = sym = qj = square = ginv = length = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(1, m + 1))
        J = random_full_rank(rng, m, n)
        Jp = mg.pseudo_inverse(J)
        mp = max(mp, np.abs(J @ Jp @ J - J).max(), np.abs(Jp @ J @ Jp - Jp).max(), np.abs(Jp @ J - np.eye(n)).max())
        Q = mg.projection_operator(J).q
        proj = max(proj, np.abs(Q @ Q - Q).max())
        sym = max(sym, np.abs(Q - Q.T).max())
        qj = max(qj, np.abs(Q @ J - J).max())
        M = mg.metric_tensor(J)
        ginv = max(ginv, np.abs(M.g_inv @ M.g - np.eye(n)).max())
        v = rng.standard_normal(m)
        s2 = mg.quadratic_length(J, v)
        length = max(length, abs(s2 - np.sum((Q @ v) ** 2)) / max(abs(s2), 1e-300))
        A = random_full_rank(rng, m, m)
        square = max(square, np.abs(mg.pseudo_inverse(A) - np.linalg.inv(A)).max())

    fmap = mg.SmoothMap(lambda x: np.array([np.sin(x[0]) * x[1], np.exp(0.3 * x[0] * x[1]), np.cos(x[1])]))
    exact = _test_map_hessian(np.array([0.4, -0.7]))

    def err(h):
        approx = mg.christoffel_terms(mg.SmoothMap(fmap.y, h_fd=h), np.array([0.4, -0.7]))
        return np.abs(approx - exact).max()

    return [
        Check("morphogenetic.moore_penrose", mp, 1e-9),
        Check("morphogenetic.projection_idempotent", proj, 1e-10),
        Check("morphogenetic.projection_symmetric", sym, 1e-10),
        Check("morphogenetic.projection_fixes_columns", qj, 1e-10),
        Check("morphogenetic.square_case", square, 1e-9),
        Check("morphogenetic.metric_inverse", ginv, 1e-10),
        Check("morphogenetic.length_consistency", length, 1e-9),
        Check("morphogenetic.christoffel_fd_convergence", abs(convergence_ratio(err, 2e-2) - 4.0), 0.5),
    ]


def _test_map_hessian(x):
    a, b = x
    e = np.exp(0.3 * a * b)
    return np.array(
        [
            [[-np.sin(a) * b, np.cos(a)], [np.cos(a), 0.0]],
            [[0.09 * b * b * e, 0.3 * e + 0.09 * a * b * e], [0.3 * e + 0.09 * a * b * e, 0.09 * a * a * e]],
            [[0.0, 0.0], [0.0, -np.cos(b)]],
        ]
    )


# ---------------------------------------------------------------------------
# entropy / Fisher


def random_family(rng: np.random.Generator, n: int, p: int) -> ef.MicrostateFamily:
    """Positive microstate counts ``exp(a.theta + b sin(c.theta)) + 0.5``."""
    A = rng.standard_normal((n, p))
    B = rng.standard_normal(n)
    C = rng.standard_normal((n, p))
    W = [
        (lambda th, a=A[j], b=B[j], c=C[j]: float(np.exp(a @ th + b * np.sin(c @ th)) + 0.5))
        for j in range(n)
    ]
    return ef.MicrostateFamily(W)


def gaussian_estimator(x: np.ndarray) -> np.ndarray:
    return np.array([x.mean(), x.std(ddof=1)])


def entropy_fisher_checks(seed: int = 0, n_samples: int = 10_000, n_trials: int = 1_000) -> list:
    sigma = 1.7
    F = ef.score_fisher_oracle(ef.gaussian(), [0.3, sigma]).f
    closed = np.diag([1.0 / sigma**2, 2.0 / sigma**2])
    oracle = np.abs(F - closed).max() / np.abs(closed).max()

    rng = np.random.default_rng(seed)
    worst = 0.0
    kinv = 0.0
    for _ in range(100):
        p = int(rng.integers(1, 4))
        n = int(rng.integers(p, p + 4))
        fam = random_family(rng, n, p)
        th = rng.uniform(-1, 1, p)
        f = ef.fisher_matrix(fam, th).f
        scale = max(np.abs(f).max(), 1.0)
        worst = max(worst, -np.linalg.eigvalsh(f)[0] / scale, np.abs(f - f.T).max())
        # the Boltzmann constant must not enter F
        s1 = ef.entropy_vector(fam, th, 1.0).s
        s2 = ef.entropy_vector(fam, th, 1.380649e-23).s
        kinv = max(kinv, np.abs(s2 - 1.380649e-23 * s1).max())

    theta = np.array([0.0, 1.0])
    Sig = ef.mc_estimator_covariance(ef.gaussian(), theta, gaussian_estimator, n_samples, n_trials, seed)
    Fg = ef.score_fisher_oracle(ef.gaussian(), theta)
    gap = ef.cramer_rao_gap(Fg.f * n_samples, Sig)
    se = ef.covariance_stderr(Sig, n_trials)
    return [
        Check("entropy_fisher.gaussian_oracle", oracle, 1e-6),
        Check("entropy_fisher.fisher_psd", worst, 1e-12),
        Check("entropy_fisher.boltzmann_scaling", kinv, 1e-30),
        Check("entropy_fisher.cramer_rao", -gap / se, 3.0),
    ]


# ---------------------------------------------------------------------------
# quantum potential and trajectories


def _paper_gaussian_error(h: float, L: float = 5.0) -> float:
    g = Grid.from_bounds(-L, L, h)
    x = g.axis(0)
    q = qp.quantum_potential_w(ScalarField(np.exp(-x**2 / 2), g)).scalar.values
    return float(np.abs(q - (1 - x**2 / 2))[g.interior()].max())


def _harmonic_error(h: float, L: float = 4.0) -> float:
    g = Grid.from_bounds(-L, L, h)
    rho, V, E = qp.harmonic_ground_state(g)
    q = qp.quantum_potential_w(rho, mode="standard").scalar.values
    return float(np.abs(q + V.values - E)[g.interior()].max())


def _energy_residual(h: float, L: float = 4.0) -> float:
    g = Grid.from_bounds(-L, L, h)
    rho, V, E = qp.harmonic_ground_state(g)
    S = qp.stationary_phase(g, E, [0.0, 0.5])
    r = qp.hj_energy_residual(S, rho, V).values
    return float(np.abs(r)[g.interior()].max())


def _weyl_error(h: float) -> float:
    g = Grid.from_bounds(-3, 3, h)
    x = g.axis(0)
    B = qp.weyl_vector(ScalarField(np.exp(np.sin(x)), g))[0]
    return float(np.abs(B - np.cos(x))[g.interior()].max())


def stationarity_ratios(rho, S, V, eps_list=(1e-2, 1e-3, 1e-4)) -> np.ndarray:
    return np.array([qp.action_stationarity(rho, S, V, eps=e) for e in eps_list])


def quantum_potential_checks(seed: int = 42, n_particles: int = 10_000) -> list:
    g = Grid.from_bounds(-5, 5, 0.05)
    x = g.axis(0)
    W = ScalarField(np.exp(-x**2 / 2), g)
    q = qp.quantum_potential_w(W).scalar.values
    gauge = 0.0
    for c in (3.7, 1e-3, 123.456):
        q2 = qp.quantum_potential_w(W.with_values(c * W.values)).scalar.values
        gauge = max(gauge, np.abs(q2 - q).max() / max(1.0, np.abs(q).max()))

    g2 = Grid.from_bounds(-4, 4, 0.01)
    rho, V, E = qp.harmonic_ground_state(g2)
    qpap = qp.quantum_potential_w(rho, mode="paper").scalar.values
    qstd = qp.quantum_potential_w(rho, mode="standard").scalar.values
    bridge = np.abs(qpap - 4 * qstd)[g2.interior()].max() / np.abs(qpap[g2.interior()]).max()

    gp = Grid.from_bounds(-4, 4, 0.01)
    pw = qp.plane_wave_phase(gp, 1.3, qp.PhysicalConstants(), [0.0, 0.1])
    uni = ScalarField(np.ones(gp.shape), gp)
    plane = np.abs(qp.hj_energy_residual(pw, uni, ScalarField(np.zeros(gp.shape), gp)).values).max()

    eps_list = (1e-2, 1e-3, 1e-4)
    gs = Grid.from_bounds(-8, 8, 2e-3)
    rho_s, V_s, E_s = qp.harmonic_ground_state(gs)
    S_s = qp.stationary_phase(gs, E_s, [0.0, 1.0])
    slope = loglog_slope(eps_list, stationarity_ratios(rho_s, S_s, V_s, eps_list))
    xs = gs.axis(0)
    shifted = np.exp(-((xs - 0.5) ** 2))
    shifted = rho_s.with_values(shifted / np.trapezoid(shifted, dx=gs.spacing[0]))
    slope_shift = loglog_slope(eps_list, stationarity_ratios(shifted, S_s, V_s, eps_list))

    # free packet
    packet = bohmian.GaussianPacket(0.0, 0.5)
    x0 = np.linspace(-1.5, 1.5, 31)
    ens = bohmian.bohmian_trajectories(None, x0, 1e-2, 1.0, grad_S=lambda y, t: bohmian.phase_gradient(packet, y, t))
    exact = packet.exact_trajectory(x0, 1.0)
    nz = exact != 0
    spread = np.max(np.abs(ens.final[nz, 0] - exact[nz]) / np.abs(exact[nz]))

    gi = Grid.from_bounds(-4, 4, 1e-3)
    rho0 = ScalarField(np.abs(packet.psi(gi.axis(0), 0.0)) ** 2, gi)
    starts = bohmian.sample_positions(rho0, n_particles, seed)
    free = bohmian.bohmian_trajectories(
        None, starts, 1e-2, 1.0, grad_S=lambda y, t: bohmian.phase_gradient(packet, y, t), seed=seed
    )
    edges = np.linspace(-4, 4, 41)
    counts, _ = np.histogram(free.final[:, 0], edges)
    expected = bohmian._bin_probabilities(packet, edges, 1.0)
    tv_free = 0.5 * np.abs(counts / counts.sum() - expected / expected.sum()).sum()
    again = bohmian.bohmian_trajectories(
        None, bohmian.sample_positions(rho0, n_particles, seed), 1e-2, 1.0,
        grad_S=lambda y, t: bohmian.phase_gradient(packet, y, t), seed=seed,
    )
    determinism = float(not np.array_equal(again.paths, free.paths))

    ds = bohmian.double_slit_scenario(n_particles=n_particles, seed=seed, dt=2e-3)
    overlap = np.abs(ds.grid.axis(0)) < ds.ensemble.final[:, 0].std()
    qdiff = np.abs(ds.Q.values - ds.Q_one_slit.values)[overlap].max()

    return [
        Check("quantum_potential.gauge_invariance", gauge, 1e-12),
        Check("quantum_potential.coefficient_bridge", bridge, 1e-8),
        Check("quantum_potential.paper_gaussian_error", _paper_gaussian_error(1e-2), 1e-3),
        Check("quantum_potential.paper_gaussian_convergence", abs(convergence_ratio(_paper_gaussian_error, 1e-2) - 4), 0.5),
        Check("quantum_potential.harmonic_error", _harmonic_error(1e-2), 1e-3),
        Check("quantum_potential.harmonic_convergence", abs(convergence_ratio(_harmonic_error, 1e-2) - 4), 0.5),
        Check("quantum_potential.weyl_convergence", abs(convergence_ratio(_weyl_error, 1e-2) - 4), 0.5),
        Check("quantum_potential.energy_residual", _energy_residual(1e-2), 1e-3),
        Check("quantum_potential.energy_convergence", abs(convergence_ratio(_energy_residual, 1e-2) - 4), 0.5),
        Check("quantum_potential.plane_wave_residual", plane, 1e-12),
        Check("quantum_potential.stationarity_slope", abs(slope - 1.0), 0.2),
        Check("quantum_potential.nonextremal_slope", abs(slope_shift - 1.0), 0.2, op=">"),
        Check("quantum_potential.free_packet_spreading", spread, 1e-3),
        Check("quantum_potential.free_packet_equivariance", tv_free, 0.05),
        Check("quantum_potential.trajectory_determinism", determinism, 0.0),
        Check("quantum_potential.double_slit_crossings", ds.axis_crossings, 0.0),
        Check("quantum_potential.double_slit_tv", ds.tv_distance, 0.05),
        Check("quantum_potential.one_slit_q_difference", qdiff, 0.0, op=">"),
    ]


# ---------------------------------------------------------------------------
# geometrodynamics


def random_lorentzian(rng: np.random.Generator, d: int) -> np.ndarray:
    """``A^T eta A`` for a well-conditioned random ``A``: signature (+,-,...)."""
    eta = np.diag([1.0] + [-1.0] * (d - 1))
    while True:
        A = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        if np.linalg.cond(A) < 10:
            g = A.T @ eta @ A
            return 0.5 * (g + g.T)


def smooth_random_fields(rng: np.random.Generator, grid: Grid):
    """Smooth random metric, phase and potential on a spacetime grid."""
    d = grid.ndim
    mesh = grid.mesh()
    base = random_lorentzian(rng, d)
    wobble = sum(0.05 * np.sin(rng.uniform(0.5, 2) * m + rng.uniform(0, 6)) for m in mesh)
    g = base * (1.0 + wobble)[..., None, None]
    k = rng.standard_normal(d)
    S = sum(ki * m for ki, m in zip(k, mesh)) + 0.3 * np.sin(sum(mesh))
    Q = 0.5 * np.cos(sum(rng.uniform(0.5, 1.5) * m for m in mesh))
    return (
        gd.SpacetimeMetric(g, grid),
        ScalarField(S, grid, "S"),
        ScalarField(Q, grid, "Q"),
    )


def geometrodynamics_checks(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    equiv = 0.0
    detlaw = 0.0
    sig_fail = 0
    for i in range(100):
        d = 2 if i % 2 == 0 else 4
        grid = Grid((0.0,) * d, (0.25,) * d, (5,) * d)
        g, S, Q = smooth_random_fields(rng, grid)
        equiv = max(equiv, gd.kg_form_discrepancy(g, S, Q).max())
        gt = gd.conformal_metric(g, Q)
        ratio = gt.det() / (np.exp(d * Q.values) * g.det())
        detlaw = max(detlaw, np.abs(ratio - 1.0).max())
        sig_fail += int(not (g.has_lorentzian_signature() and gt.has_lorentzian_signature()))

    consts = qp.PhysicalConstants()
    grid = Grid((0.0, -1.0), (0.1, 0.1), (11, 21))
    tt, xx = grid.mesh()
    q = 0.4
    p = 0.6
    E = np.sqrt(p**2 + np.exp(q)) * consts.c
    S = ScalarField(E * tt - p * xx, grid)
    Qc = ScalarField(np.full(grid.shape, q), grid)
    flat = gd.minkowski(grid, consts.c)
    shell = max(
        np.abs(gd.kg_hj_residual(flat, S, Qc, consts, form).values).max() for form in ("original", "conformal")
    )

    gs = Grid((0.0, -3.0), (0.05, 0.01), (5, 601))
    _, xs = gs.mesh()
    amp = ScalarField(np.exp(-(xs**2) / 2), gs)
    rq = gd.relativistic_quantum_potential(amp, consts).values
    static = np.abs(rq - (xs**2 - 1))[:, 2:-2].max()
    mass_roundtrip = np.abs(gd.quantum_mass(ScalarField(np.zeros(gs.shape), gs), 1.3).M_squared.values - 1.3**2).max()
    return [
        Check("geometrodynamics.form_equivalence", equiv, 1e-12),
        Check("geometrodynamics.mass_shell", shell, 1e-10),
        Check("geometrodynamics.determinant_law", detlaw, 1e-10),
        Check("geometrodynamics.signature_preservation", sig_fail, 0.0),
        Check("geometrodynamics.static_reduction", static, 1e-3),
        Check("geometrodynamics.quantum_mass_roundtrip", mass_roundtrip, 0.0),
    ]


SUITES = {
    "morphogenetic": morphogenetic_checks,
    "entropy_fisher": entropy_fisher_checks,
    "quantum_potential": quantum_potential_checks,
    "geometrodynamics": geometrodynamics_checks,
}


def run_validation(filter: Optional[str] = None, overrides: Optional[dict] = None) -> list:
    """Run every suite whose name starts with ``filter`` (all when None)."""
    names = [n for n in SUITES if filter is None or n.startswith(filter)]
    if not names:
        raise KeyError(f"no module matches filter {filter!r}; choose from {sorted(SUITES)}")
    checks = []
    for n in names:
        for c in SUITES[n]():
            c.module = n
            checks.append(c)
    return apply_overrides(checks, overrides)
