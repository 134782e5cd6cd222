"""Bohmian trajectories under the guidance law ``dx/dt = grad S / m``.

Closed-form free Gaussian packets supply exact phases for tests and for the
double-slit scenario, so no Schrodinger solver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import EmptyEnsemble, StepInvalid
from .fields import FieldSeries, Grid, ScalarField, gradient
from .quantum_potential import PhysicalConstants, quantum_potential_w


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Particle paths on a common time axis.

    ``paths`` has shape ``(n_times, n_particles, ndim)``; ``exited`` flags
    particles that reached the edge of the domain and were frozen there.
    """

    times: np.ndarray
    paths: np.ndarray
    exited: np.ndarray
    dt: float
    t_final: float
    seed: Optional[int] = None

    @property
    def n_particles(self) -> int:
        return self.paths.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.paths[-1]


def particle_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def sample_positions(rho: ScalarField, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` positions from a gridded density by inverse CDF.

    In 2-D the first coordinate is drawn from its marginal and the second
    from the conditional of the nearest row. Samples are linearly
    interpolated within cells and therefore lie inside the grid. Each
    particle uses its own stream derived from ``(seed, index)``.
    """
    if n < 1:
        raise EmptyEnsemble("need at least one particle")
    grid = rho.grid
    if not np.all(rho.values >= 0):
        raise ValueError("density must be non-negative")
    u = np.array([particle_rng(seed, i).random(grid.ndim) for i in range(n)])
    if grid.ndim == 1:
        return _inverse_cdf(rho.values, grid.axis(0), u[:, 0])[:, None]
    if grid.ndim == 2:
        x, y = grid.axes
        marginal = np.trapezoid(rho.values, dx=grid.spacing[1], axis=1)
        xs = _inverse_cdf(marginal, x, u[:, 0])
        rows = np.clip(np.rint((xs - x[0]) / grid.spacing[0]).astype(int), 0, x.size - 1)
        ys = np.array([_inverse_cdf(rho.values[r], y, np.array([ui]))[0] for r, ui in zip(rows, u[:, 1])])
        return np.column_stack([xs, ys])
    raise ValueError("sampling supports 1-D and 2-D grids")


def _inverse_cdf(p: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    # cumulative trapezoid, then invert the piecewise-linear CDF
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    return np.interp(u, cdf, x)


# ---------------------------------------------------------------------------
# closed-form states


@dataclass(frozen=True)
class GaussianPacket:
    """Free 1-D Gaussian packet.

    ``psi(x, 0) ~ exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / hbar)`` evolved
    exactly; ``|psi|^2`` is normal with standard deviation
    ``sigma_t = sigma sqrt(1 + (hbar t / (2 m sigma^2))^2)``.
    """

    x0: float = 0.0
    sigma: float = 1.0
    p0: float = 0.0
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def _alpha(self, t):
        c = self.consts
        return self.sigma**2 + 1j * c.hbar * t / (2.0 * c.m)

    def psi(self, x, t) -> np.ndarray:
        c = self.consts
        x = np.asarray(x, dtype=float)
        a = self._alpha(t)
        v = self.p0 / c.m
        xi = x - self.x0 - v * t
        norm = (2.0 * np.pi) ** -0.25 * np.sqrt(self.sigma / a)
        phase = self.p0 * (x - self.x0) / c.hbar - self.p0**2 * t / (2.0 * c.m * c.hbar)
        return norm * np.exp(-(xi**2) / (4.0 * a) + 1j * phase)

    def psi_and_derivative(self, x, t) -> tuple:
        c = self.consts
        x = np.asarray(x, dtype=float)
        xi = x - self.x0 - self.p0 / c.m * t
        psi = self.psi(x, t)
        return psi, psi * (-xi / (2.0 * self._alpha(t)) + 1j * self.p0 / c.hbar)

    def width(self, t) -> float:
        c = self.consts
        return self.sigma * np.sqrt(1.0 + (c.hbar * t / (2.0 * c.m * self.sigma**2)) ** 2)

    def exact_trajectory(self, x_start, t) -> np.ndarray:
        """Analytic Bohmian path through ``x_start`` at ``t = 0``."""
        c = self.consts
        return self.x0 + self.p0 / c.m * t + (np.asarray(x_start) - self.x0) * self.width(t) / self.sigma


@dataclass(frozen=True)
class Superposition:
    """Sum of free packets, optionally with complex weights."""

    packets: Sequence[GaussianPacket]
    weights: Optional[Sequence[complex]] = None

    def _w(self):
        return [1.0] * len(self.packets) if self.weights is None else list(self.weights)

    @property
    def consts(self) -> PhysicalConstants:
        return self.packets[0].consts

    def psi(self, x, t):
        return sum(w * p.psi(x, t) for w, p in zip(self._w(), self.packets))

    def psi_and_derivative(self, x, t) -> tuple:
        psi = dpsi = 0.0
        for w, p in zip(self._w(), self.packets):
            a, b = p.psi_and_derivative(x, t)
            psi = psi + w * a
            dpsi = dpsi + w * b
        return psi, dpsi

    def normalized(self, half_width: float = None, n: int = 200_001) -> "Superposition":
        """Same state rescaled to unit norm (quadrature at ``t = 0``)."""
        centers = [p.x0 for p in self.packets]
        widths = [p.sigma for p in self.packets]
        hw = half_width or (max(abs(c) for c in centers) + 12.0 * max(widths))
        x = np.linspace(-hw, hw, n)
        norm = np.trapezoid(np.abs(self.psi(x, 0.0)) ** 2, x)
        return Superposition(self.packets, [w / np.sqrt(norm) for w in self._w()])


def phase_gradient(state, x, t) -> np.ndarray:
    """``grad S = hbar Im(psi' / psi)`` of a closed-form state."""
    psi, dpsi = state.psi_and_derivative(x, t)
    return state.consts.hbar * np.imag(dpsi / psi)


# ---------------------------------------------------------------------------
# integrator

PhaseLike = Union[FieldSeries, Callable]


class _SeriesVelocity:
    """Multilinear interpolation of grad S from a gridded phase series,
    linear in time between slices."""

    def __init__(self, S: FieldSeries, m: float):
        self.S = S
        self.m = m
        grads = np.array([gradient(S.values[i], S.grid) for i in range(S.nt)])
        self.interps = [
            [RegularGridInterpolator(S.grid.axes, grads[i, a], bounds_error=False, fill_value=None)
             for a in range(S.grid.ndim)]
            for i in range(S.nt)
        ]

    def _at_slice(self, i, x):
        return np.column_stack([f(x) for f in self.interps[i]])

    def __call__(self, x, t):
        S = self.S
        if S.nt == 1:
            return self._at_slice(0, x) / self.m
        s = np.clip((t - S.t0) / S.dt, 0.0, S.nt - 1.0)
        i = min(int(np.floor(s)), S.nt - 2)
        f = s - i
        return ((1.0 - f) * self._at_slice(i, x) + f * self._at_slice(i + 1, x)) / self.m


def _fd_velocity(phase: Callable, m: float, h: float) -> Callable:
    def v(x, t):
        out = np.empty_like(x)
        for a in range(x.shape[1]):
            e = np.zeros(x.shape[1])
            e[a] = h
            out[:, a] = (phase(x + e, t) - phase(x - e, t)) / (2.0 * h)
        return out / m

    return v


def bohmian_trajectories(
    phase: Optional[PhaseLike],
    initial: np.ndarray,
    dt: float,
    t_final: float,
    consts: PhysicalConstants = PhysicalConstants(),
    *,
    grad_S: Optional[Callable] = None,
    bounds: Optional[Sequence[tuple]] = None,
    record_every: int = 1,
    seed: Optional[int] = None,
    t0: float = 0.0,
    h_fd: float = 1e-6,
) -> TrajectoryEnsemble:
    """Integrate ``dx/dt = grad S(x, t) / m`` with classical RK4.

    Parameters
    ----------
    phase : FieldSeries or callable or None
        Gridded phase (gradient by stencil, interpolated multilinearly in
        space and linearly in time) or a callable ``S(x, t)`` with ``x`` of
        shape ``(N, d)`` (gradient by central differences with step
        ``h_fd``). Ignored when ``grad_S`` is given.
    initial : ndarray, shape (N,) or (N, d)
        Starting positions.
    grad_S : callable, optional
        Exact phase gradient ``grad_S(x, t) -> (N, d)``.
    bounds : sequence of (lo, hi), optional
        Domain box; defaults to the grid extent of a gridded phase.
        Particles reaching it are clamped, frozen and flagged.
    record_every : int
        Store every k-th step (the final time is always stored).
    """
    if not (np.isfinite(dt) and dt > 0):
        raise StepInvalid(f"time step must be positive, got {dt}")
    if t_final < t0:
        raise StepInvalid("t_final must not precede t0")
    x = np.asarray(initial, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise EmptyEnsemble("no particles")
    x = x.copy()

    if grad_S is not None:
        vel = lambda y, t: np.asarray(grad_S(y, t), dtype=float).reshape(y.shape) / consts.m
    elif isinstance(phase, FieldSeries):
        vel = _SeriesVelocity(phase, consts.m)
        if bounds is None:
            bounds = list(zip(phase.grid.origin, phase.grid.upper))
    elif callable(phase):
        vel = _fd_velocity(phase, consts.m, h_fd)
    else:
        raise TypeError("provide a FieldSeries, a phase callable or grad_S")

    lo = hi = None
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        if np.any((x < lo) | (x > hi)):
            raise ValueError("initial positions outside the domain")

    n_steps = int(round((t_final - t0) / dt))
    if not np.isclose(t0 + n_steps * dt, t_final, rtol=1e-9, atol=1e-12):
        raise StepInvalid("t_final - t0 must be an integer multiple of dt")
    frozen = np.zeros(x.shape[0], dtype=bool)
    times, frames = [t0], [x.copy()]
    for k in range(n_steps):
        t = t0 + k * dt
        live = ~frozen
        y = x[live]
        k1 = vel(y, t)
        k2 = vel(y + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = vel(y + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = vel(y + dt * k3, t + dt)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if lo is not None:
            out = np.any((y <= lo) | (y >= hi), axis=1)
            y = np.clip(y, lo, hi)
            idx = np.flatnonzero(live)
            frozen[idx[out]] = True
        x[live] = y
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            times.append(t0 + (k + 1) * dt)
            frames.append(x.copy())
    return TrajectoryEnsemble(
        times=np.array(times), paths=np.array(frames), exited=frozen, dt=dt, t_final=t_final, seed=seed
    )


# ---------------------------------------------------------------------------
# double slit


@dataclass(frozen=True)
class DoubleSlitResult:
    grid: Grid
    t_screen: float
    psi: np.ndarray  # complex psi(y, t_screen)
    rho: ScalarField
    S_grad: np.ndarray
    Q: ScalarField
    Q_one_slit: ScalarField
    ensemble: TrajectoryEnsemble
    bin_edges: np.ndarray
    counts: np.ndarray
    expected: np.ndarray  # |psi|^2 probability per bin

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def tv_distance(self) -> float:
        emp = self.counts / self.counts.sum()
        return 0.5 * float(np.abs(emp - self.expected).sum())

    @property
    def axis_crossings(self) -> int:
        """Particles whose transverse coordinate ever changes sign."""
        s = np.sign(self.ensemble.paths[..., 0])
        return int(np.any(s != s[0], axis=0).sum())


def double_slit_scenario(
    d: float = 4.0,
    sigma: float = 0.2,
    p: float = 10.0,
    screen_distance: float = 20.0,
    n_particles: int = 10_000,
    seed: int = 42,
    consts: PhysicalConstants = PhysicalConstants(),
    dt: float = 2e-3,
    n_bins: int = 40,
    grid_spacing: float = 0.02,
    record_every: int = 50,
) -> DoubleSlitResult:
    """Two free Gaussian packets launched from slits at ``y = +-d/2``.

    The longitudinal motion is uniform with momentum ``p``, so the screen
    at ``screen_distance`` is reached at ``t = m L / p`` and only the
    transverse coordinate ``y`` is simulated. Initial positions are drawn
    from ``|psi(y, 0)|^2`` for ``y > 0`` and mirrored, which makes the
    ensemble exactly symmetric.
    """
    if not (d > 0 and sigma > 0 and p > 0 and screen_distance > 0):
        raise ValueError("d, sigma, p and screen_distance must be positive")
    if n_particles < 1:
        raise EmptyEnsemble("need at least one particle")
    t_screen = consts.m * screen_distance / p
    slit = [GaussianPacket(+d / 2, sigma, 0.0, consts), GaussianPacket(-d / 2, sigma, 0.0, consts)]
    two = Superposition(slit).normalized()
    one = Superposition(slit[:1])

    half_width = d / 2 + 8.0 * slit[0].width(t_screen)
    n_cells = int(np.ceil(2 * half_width / grid_spacing))
    grid = Grid((-half_width,), (2 * half_width / n_cells,), (n_cells + 1,))
    y = grid.axis(0)
    psi = two.psi(y, t_screen)
    rho = ScalarField(np.abs(psi) ** 2, grid, "rho")
    rho1 = ScalarField(np.abs(one.psi(y, t_screen)) ** 2, grid, "rho")
    Q = quantum_potential_w(rho, consts, "standard").scalar
    Q1 = quantum_potential_w(rho1, consts, "standard").scalar

    # initial ensemble, symmetric about y = 0
    y0_grid = Grid.from_bounds(0.0, d / 2 + 8.0 * sigma, sigma / 200.0)
    rho0 = ScalarField(np.abs(two.psi(y0_grid.axis(0), 0.0)) ** 2, y0_grid, "rho0")
    n_half = (n_particles + 1) // 2
    upper = sample_positions(rho0, n_half, seed)[:, 0]
    upper = np.where(upper == 0.0, np.finfo(float).tiny, upper)
    y0 = np.concatenate([upper, -upper])[:n_particles]

    ens = bohmian_trajectories(
        None,
        y0,
        dt,
        t_screen,
        consts,
        grad_S=lambda x, t: phase_gradient(two, x, t),
        bounds=[(grid.origin[0], grid.upper[0])],
        record_every=record_every,
        seed=seed,
    )
    edges = np.linspace(-half_width / 2, half_width / 2, n_bins + 1)
    counts, _ = np.histogram(ens.final[:, 0], bins=edges)
    expected = _bin_probabilities(two, edges, t_screen)
    return DoubleSlitResult(
        grid=grid,
        t_screen=t_screen,
        psi=psi,
        rho=rho,
        S_grad=phase_gradient(two, y, t_screen),
        Q=Q,
        Q_one_slit=Q1,
        ensemble=ens,
        bin_edges=edges,
        counts=counts,
        expected=expected,
    )


def _bin_probabilities(state, edges, t, per_bin: int = 200) -> np.ndarray:
    out = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        ys = np.linspace(edges[i], edges[i + 1], per_bin + 1)
        out[i] = np.trapezoid(np.abs(state.psi(ys, t)) ** 2, ys)
    return out
