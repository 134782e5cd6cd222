"""Relativistic quantum potential, quantum mass and the conformal metric.

Spacetime grids put time on axis 0 and space on the remaining axes.
Metrics are written in ``(t, x, ...)`` coordinates with signature
``(+, -, -, -)``, so flat spacetime is ``diag(c^2, -1, ..., -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric, GridMismatch, NonPositiveField, QuantumMassOverflow
from .fields import Grid, ScalarField, gradient, second_derivative
from .quantum_potential import PhysicalConstants, quantum_potential_w

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class SpacetimeMetric:
    """Symmetric metric per grid point, shape ``grid.shape + (d, d)``.

    A constant ``(d, d)`` matrix is broadcast over the grid.
    """

    g: np.ndarray
    grid: Grid

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        d = self.grid.ndim
        if g.shape == (d, d):
            g = np.broadcast_to(g, self.grid.shape + (d, d))
        if g.shape != self.grid.shape + (d, d):
            raise GridMismatch(f"metric shape {g.shape} does not fit grid {self.grid.shape}")
        asym = np.abs(g - np.swapaxes(g, -1, -2)).max()
        if asym > 1e-12 * max(np.abs(g).max(), 1.0):
            raise ValueError(f"metric must be symmetric (asymmetry {asym:.2e})")
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        if np.any(np.abs(np.linalg.det(g)) <= 1e-12):
            raise DegenerateMetric("metric determinant vanishes somewhere on the grid")
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.g.shape[-1]

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    def det(self) -> np.ndarray:
        return np.linalg.det(self.g)

    def signature(self) -> np.ndarray:
        """Sorted eigenvalue signs per point, shape ``grid.shape + (d,)``."""
        return np.sign(np.linalg.eigvalsh(self.g))

    def has_lorentzian_signature(self) -> bool:
        """One positive and ``d - 1`` negative eigenvalues everywhere."""
        s = self.signature()
        return bool(np.all((s > 0).sum(axis=-1) == 1) and np.all((s < 0).sum(axis=-1) == self.dim - 1))


def minkowski(grid: Grid, c: float = 1.0) -> SpacetimeMetric:
    d = grid.ndim
    return SpacetimeMetric(np.diag([c**2] + [-1.0] * (d - 1)), grid)


@dataclass(frozen=True)
class QuantumMass:
    M_squared: ScalarField
    m: float


def _positive(f: ScalarField) -> np.ndarray:
    if not np.all(f.values > 0):
        raise NonPositiveField(f"field {f.name or '|psi|'} must be strictly positive")
    return np.asarray(f.values, dtype=float)


def dalembertian(values, grid: Grid, c: float = 1.0, metric: SpacetimeMetric = None) -> np.ndarray:
    """``(lap - c^-2 d2/dt2) f`` on a spacetime grid (axis 0 is time).

    With a diagonal ``metric`` the covariant form
    ``-(1/sqrt|g|) d_mu (sqrt|g| g^{mu mu} d_mu f)`` is used instead, which
    reduces to the flat operator for ``diag(c^2, -1, ...)``.
    """
    f = np.asarray(values, dtype=float)
    if metric is None:
        out = -second_derivative(f, grid.spacing[0], 0) / c**2
        for a in range(1, grid.ndim):
            out = out + second_derivative(f, grid.spacing[a], a)
        return out
    g = metric.g
    off = g - np.einsum("...ii->...i", g)[..., None] * np.eye(metric.dim)
    if np.any(off != 0):
        raise NotImplementedError("only diagonal metrics are supported for the curved wave operator")
    diag = np.einsum("...ii->...i", g)
    sqrt_g = np.sqrt(np.abs(np.prod(diag, axis=-1)))
    grads = gradient(f, grid)
    out = np.zeros_like(f)
    for a in range(grid.ndim):
        flux = sqrt_g * grads[a] / diag[..., a]
        out = out + np.gradient(flux, grid.spacing[a], axis=a, edge_order=2)
    return -out / sqrt_g


def relativistic_quantum_potential(
    abs_psi: ScalarField,
    consts: PhysicalConstants = PhysicalConstants(),
    metric: SpacetimeMetric = None,
) -> ScalarField:
    """``Q = (hbar^2 / m^2 c^2) (lap - c^-2 d2/dt2)|psi| / |psi|``."""
    a = _positive(abs_psi)
    box = dalembertian(a, abs_psi.grid, consts.c, metric)
    q = consts.hbar**2 / (consts.m**2 * consts.c**2) * box / a
    return abs_psi.with_values(q, name="Q")


def quantum_mass(Q: ScalarField, m: float) -> QuantumMass:
    """``M^2 = m^2 exp(Q)`` pointwise."""
    q = np.asarray(Q.values, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("quantum potential must be finite")
    if np.any(q > EXP_LIMIT):
        raise QuantumMassOverflow(f"exp(Q) overflows for Q > {EXP_LIMIT}")
    return QuantumMass(Q.with_values(m**2 * np.exp(q), name="M2"), m)


def quantum_mass_from_w(W: ScalarField, consts: PhysicalConstants = PhysicalConstants()) -> QuantumMass:
    """Quantum mass fed by the non-relativistic potential of a microstate field."""
    return quantum_mass(quantum_potential_w(W, consts, "paper").scalar, consts.m)


def conformal_factor(Q: ScalarField) -> np.ndarray:
    q = np.asarray(Q.values, dtype=float)
    if np.any(q > EXP_LIMIT):
        raise QuantumMassOverflow(f"exp(Q) overflows for Q > {EXP_LIMIT}")
    return np.exp(q)


def conformal_metric(g: SpacetimeMetric, Q: ScalarField, m: float = 1.0) -> SpacetimeMetric:
    """``g~ = (M^2 / m^2) g = exp(Q) g``; ``m`` cancels."""
    if Q.grid.shape != g.grid.shape:
        raise GridMismatch("Q and the metric live on different grids")
    return SpacetimeMetric(conformal_factor(Q)[..., None, None] * g.g, g.grid)


def kg_hj_residual(
    g: SpacetimeMetric,
    S: ScalarField,
    Q: ScalarField,
    consts: PhysicalConstants = PhysicalConstants(),
    form: str = "original",
) -> ScalarField:
    """Klein-Gordon Hamilton-Jacobi residual.

    ``original``: ``g^{mu nu} dS dS - m^2 c^2 exp(Q)``.
    ``conformal``: ``g~^{mu nu} dS dS - m^2 c^2`` with ``g~ = exp(Q) g``.
    For a scalar ``S`` the covariant derivative is the partial one, so the
    conformal residual is the original one times ``exp(-Q)``; both vanish
    together. :func:`kg_form_discrepancy` compares them pointwise.
    """
    if form not in ("original", "conformal"):
        raise ValueError(f"form must be 'original' or 'conformal', got {form!r}")
    if S.grid.shape != g.grid.shape or Q.grid.shape != g.grid.shape:
        raise GridMismatch("S, Q and the metric must share one grid")
    dS = np.stack(gradient(S.values, S.grid), axis=-1)
    mc2 = (consts.m * consts.c) ** 2
    if form == "original":
        ginv = g.inverse()
        return S.with_values(np.einsum("...i,...ij,...j->...", dS, ginv, dS) - mc2 * conformal_factor(Q), "kg_residual")
    ginv = conformal_metric(g, Q, consts.m).inverse()
    return S.with_values(np.einsum("...i,...ij,...j->...", dS, ginv, dS) - mc2, "kg_residual")


def kg_form_discrepancy(
    g: SpacetimeMetric, S: ScalarField, Q: ScalarField, consts: PhysicalConstants = PhysicalConstants()
) -> np.ndarray:
    """``|r_original - exp(Q) r_conformal|`` pointwise.

    The conformal residual is brought back to the normalization of the
    original equation by the factor ``M^2/m^2 = exp(Q)``; the difference
    is then pure rounding if the conformal inverse metric is right.
    """
    r0 = kg_hj_residual(g, S, Q, consts, "original").values
    r1 = kg_hj_residual(g, S, Q, consts, "conformal").values
    return np.abs(r0 - conformal_factor(Q) * r1)
