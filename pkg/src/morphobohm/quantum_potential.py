"""Quantum potential from microstate fields, the Fisher action and the
quantum Hamilton-Jacobi energy balance on a grid.

``W`` is a strictly positive spatial field, typically the density itself.
Two coefficient conventions are offered for the potential:

``"paper"``
    ``Q_ij = (1/2m) [ (1/W^2) dW/dx_i dW/dx_j - (2/W) d2W/dx_i dx_j ]`` with
    the scalar potential taken as the trace ``sum_i Q_ii``. No ``hbar``.
``"standard"``
    Bohm's ``Q = -(hbar^2/2m) lap(sqrt W) / sqrt W``. With ``hbar = 1`` it
    is exactly a quarter of the ``paper``-mode trace, stencil by stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatch, NonPositiveField, NotNormalized
from .fields import FieldSeries, Grid, ScalarField, gradient, hessian, integrate_grid

MODES = ("paper", "standard")


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    m: float = 1.0
    k_boltz: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m", "k_boltz", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be positive, got {v}")


@dataclass(frozen=True)
class QPotentialResult:
    scalar: ScalarField
    mode: str
    tensor: Optional[np.ndarray] = None  # (d, d) + grid.shape, paper mode only


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _positive(W: ScalarField) -> np.ndarray:
    if not np.all(W.values > 0):
        raise NonPositiveField(f"field {W.name or 'W'} must be strictly positive")
    return np.asarray(W.values, dtype=float)


def weyl_vector(W: ScalarField) -> np.ndarray:
    """``B_h = d log W / dx_h``; shape ``(ndim,) + grid.shape``."""
    w = _positive(W)
    return np.array(gradient(np.log(w), W.grid))


def eq4_condition_residual(W: ScalarField) -> ScalarField:
    """Pointwise ``max_{k,p} | d2 log W/dx_k dx_p - dlogW/dx_k dlogW/dx_p |``.

    Zero exactly when the Hessian of ``log W`` equals the outer product of
    its gradient, the condition under which the connection term of the
    covariant derivative collapses to the gradient of ``log W``.
    """
    w = _positive(W)
    L = np.log(w)
    g = np.array(gradient(L, W.grid))
    H = hessian(L, W.grid)
    res = np.abs(H - g[:, None] * g[None, :])
    return W.with_values(res.reshape((-1,) + w.shape).max(axis=0), name="eq4_residual")


def quantum_potential_w(
    W: ScalarField, consts: PhysicalConstants = PhysicalConstants(), mode: str = "paper"
) -> QPotentialResult:
    """Quantum potential of a positive field ``W``.

    Both modes are discretized through the amplitude ``R = sqrt(W)``:
    substituting ``W = R^2`` turns the ``paper``-mode tensor into
    ``Q_ij = -(2/m) d2R/dx_i dx_j / R`` and the standard scalar into
    ``-(hbar^2/2m) lap(R)/R``, so the two share one stencil and differ by
    the constant factor ``4/hbar^2``. Invariant under ``W -> c W``.
    """
    _check_mode(mode)
    w = _positive(W)
    R = np.sqrt(w)
    H = hessian(R, W.grid) / R
    if mode == "paper":
        tensor = -(2.0 / consts.m) * H
        scalar = np.einsum("ii...->...", tensor)
        return QPotentialResult(W.with_values(scalar, name="Q"), mode, tensor)
    lap_over_r = np.einsum("ii...->...", H)
    scalar = -(consts.hbar**2 / (2.0 * consts.m)) * lap_over_r
    return QPotentialResult(W.with_values(scalar, name="Q"), mode)


def _as_series(S, grid: Grid) -> FieldSeries:
    if not isinstance(S, FieldSeries):
        raise TypeError("S must be a FieldSeries")
    if not S.grid.same_as(grid):
        raise GridMismatch("S is not on the same grid as the other fields")
    if S.nt < 2:
        raise GridMismatch("S needs at least two time slices for dS/dt")
    return S


def _fisher_density(rho: np.ndarray, grid: Grid, consts: PhysicalConstants, mode: str) -> np.ndarray:
    g = np.array(gradient(np.log(rho), grid))
    score_sq = np.einsum("i...,i...->...", g, g)
    coef = 1.0 / (2.0 * consts.m) if mode == "paper" else consts.hbar**2 / (8.0 * consts.m)
    return coef * rho * score_sq


def fisher_action(
    rho: ScalarField,
    S: FieldSeries,
    V: ScalarField,
    consts: PhysicalConstants = PhysicalConstants(),
    mode: str = "paper",
    norm_tol: float = 1e-6,
) -> dict:
    """Classical and Fisher parts of the average action over the time window.

    ``classical = int rho [dS/dt + |grad S|^2/2m + V] dt dx`` and
    ``fisher_term = int c rho |grad log rho|^2 dt dx`` with ``c = 1/2m``
    (``mode="paper"``) or ``c = hbar^2/8m`` (``mode="standard"``, the
    coefficient whose variation gives Bohm's potential). ``rho`` is held
    fixed over the window; time integrals use the trapezoidal rule.
    """
    _check_mode(mode)
    grid = rho.grid
    if not V.grid.same_as(grid):
        raise GridMismatch("V is not on the same grid as rho")
    S = _as_series(S, grid)
    r = _positive(rho)
    total_mass = integrate_grid(r, grid)
    if abs(total_mass - 1.0) > norm_tol:
        raise NotNormalized(f"integral of rho is {total_mass!r}, expected 1")

    dSdt = S.time_derivative()
    per_slice = []
    for i in range(S.nt):
        gS = np.array(gradient(S.values[i], grid))
        kinetic = np.einsum("i...,i...->...", gS, gS) / (2.0 * consts.m)
        per_slice.append(integrate_grid(r * (dSdt[i] + kinetic + V.values), grid))
    fisher_rate = integrate_grid(_fisher_density(r, grid, consts, mode), grid)
    span = S.dt * (S.nt - 1)
    classical = float(np.trapezoid(per_slice, dx=S.dt))
    fisher_term = fisher_rate * span
    return {"classical": classical, "fisher_term": fisher_term, "total": classical + fisher_term}


def tilt_direction(rho: ScalarField, shift: float = 0.3) -> ScalarField:
    """Normalized density ``rho (1 + tanh(x_1 - shift)) / Z``.

    The ratio to ``rho`` is bounded, so ``(1 - eps) rho + eps eta`` stays
    positive for ``|eps|`` small of either sign and the action is a smooth
    function of ``eps``.
    """
    x1 = rho.grid.mesh()[0]
    eta = rho.values * (1.0 + np.tanh(x1 - shift))
    return rho.with_values(eta / integrate_grid(eta, rho.grid), name="eta")


def action_stationarity(
    rho: ScalarField,
    S: FieldSeries,
    V: ScalarField,
    consts: PhysicalConstants = PhysicalConstants(),
    eps: float = 1e-3,
    mode: str = "standard",
    direction: Optional[ScalarField] = None,
) -> float:
    """First-variation ratio ``[A(rho_eps) - A(rho)] / eps``.

    ``rho_eps = (1 - eps) rho + eps eta`` stays positive and normalized for
    any normalized positive ``eta`` (default: :func:`tilt_direction`). Around
    a stationary state the ratio vanishes linearly in ``eps``; elsewhere it
    tends to the nonzero first variation. ``eps = 0`` returns 0.
    """
    if eps == 0:
        return 0.0
    eta = tilt_direction(rho) if direction is None else direction
    base = fisher_action(rho, S, V, consts, mode)["total"]
    pert = rho.with_values((1.0 - eps) * rho.values + eps * eta.values)
    return (fisher_action(pert, S, V, consts, mode)["total"] - base) / eps


def hj_energy_residual(
    S: FieldSeries,
    W: ScalarField,
    V: ScalarField,
    consts: PhysicalConstants = PhysicalConstants(),
    mode: str = "standard",
    slice_index: int = 0,
) -> ScalarField:
    """Signed quantum Hamilton-Jacobi residual at one time slice.

    ``|grad S|^2/2m + V + Q(W) + dS/dt``; zero for an exact solution.
    """
    grid = W.grid
    if not V.grid.same_as(grid):
        raise GridMismatch("V is not on the same grid as W")
    S = _as_series(S, grid)
    q = quantum_potential_w(W, consts, mode).scalar.values
    gS = np.array(gradient(S.values[slice_index], grid))
    kinetic = np.einsum("i...,i...->...", gS, gS) / (2.0 * consts.m)
    dSdt = S.time_derivative()[slice_index]
    return W.with_values(kinetic + V.values + q + dSdt, name="hj_residual")


def stationary_phase(grid: Grid, energy: float, times) -> FieldSeries:
    """``S(x, t) = -E t`` sampled at ``times``."""
    return FieldSeries.from_function(lambda *a: -energy * a[-1] * np.ones_like(a[0]), grid, times, "S")


def plane_wave_phase(grid: Grid, p, consts: PhysicalConstants, times) -> FieldSeries:
    """``S = p.x - (|p|^2 / 2m) t``."""
    p = np.broadcast_to(np.asarray(p, dtype=float), (grid.ndim,))
    energy = float(p @ p) / (2.0 * consts.m)

    def f(*args):
        *xs, t = args
        return sum(pi * xi for pi, xi in zip(p, xs)) - energy * t

    return FieldSeries.from_function(f, grid, times, "S")


def harmonic_ground_state(grid: Grid, consts: PhysicalConstants = PhysicalConstants(), omega: float = 1.0):
    """Ground state of ``V = m w^2 |x|^2 / 2``: normalized density, potential
    and energy ``E = d hbar w / 2``."""
    a = consts.m * omega / consts.hbar
    mesh = grid.mesh()
    r2 = sum(m**2 for m in mesh)
    rho = np.exp(-a * r2)
    rho = ScalarField(rho / integrate_grid(rho, grid), grid, "rho")
    V = ScalarField(0.5 * consts.m * omega**2 * r2, grid, "V")
    energy = 0.5 * grid.ndim * consts.hbar * omega
    return rho, V, energy
