"""Scalar fields on uniform Cartesian grids and their finite-difference stencils.

All derivatives are second order: central in the interior and one-sided
(three or four point) at the edges, with no ghost cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import GridMismatch, NonPositiveField

MIN_POINTS = 5


@dataclass(frozen=True)
class Grid:
    """Uniform grid: ``origin[a] + i * spacing[a]`` for ``i < shape[a]``."""

    origin: tuple
    spacing: tuple
    shape: tuple

    def __post_init__(self):
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        spacing = tuple(float(h) for h in np.atleast_1d(self.spacing))
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        if not (len(origin) == len(spacing) == len(shape)):
            raise GridMismatch("origin, spacing and shape must have the same length")
        if any(not np.isfinite(h) or h <= 0 for h in spacing):
            raise GridMismatch(f"grid spacing must be positive, got {spacing}")
        if any(n < MIN_POINTS for n in shape):
            raise GridMismatch(f"need at least {MIN_POINTS} points per axis, got {shape}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def from_bounds(cls, lower, upper, spacing) -> "Grid":
        """Grid covering ``[lower, upper]`` per axis with the given spacing.

        The upper bound is included when it lies on the lattice (to within
        1e-9 of a cell).
        """
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), lower.shape)
        if np.any(spacing <= 0):
            raise GridMismatch(f"grid spacing must be positive, got {spacing}")
        counts = np.floor((upper - lower) / spacing + 1e-9).astype(int) + 1
        return cls(tuple(lower), tuple(spacing), tuple(counts))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def axis(self, a: int) -> np.ndarray:
        return self.origin[a] + self.spacing[a] * np.arange(self.shape[a])

    @property
    def axes(self) -> list:
        return [self.axis(a) for a in range(self.ndim)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes, indexing="ij")

    @property
    def upper(self) -> tuple:
        return tuple(o + h * (n - 1) for o, h, n in zip(self.origin, self.spacing, self.shape))

    def interior(self, margin: int = 2) -> tuple:
        """Index slices excluding ``margin`` points at each edge."""
        return tuple(slice(margin, n - margin) for n in self.shape)

    def same_as(self, other: "Grid", rtol: float = 1e-12) -> bool:
        return self.shape == other.shape and np.allclose(
            self.origin + self.spacing, other.origin + other.spacing, rtol=rtol, atol=1e-300
        )


@dataclass(frozen=True)
class ScalarField:
    """Values of one scalar quantity on a :class:`Grid`."""

    values: np.ndarray
    grid: Grid
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, grid: Grid, name: str = "") -> "ScalarField":
        return cls(np.asarray(f(*grid.mesh()), dtype=float) * np.ones(grid.shape), grid, name)

    def require_positive(self) -> None:
        if not np.all(self.values > 0):
            raise NonPositiveField(f"field {self.name or '?'} must be strictly positive on the grid")

    def with_values(self, values, name: Optional[str] = None) -> "ScalarField":
        return ScalarField(np.asarray(values), self.grid, self.name if name is None else name)

    def integral(self) -> float:
        return integrate_grid(self.values, self.grid)


@dataclass(frozen=True)
class FieldSeries:
    """A scalar field sampled at ``nt >= 1`` equally spaced times.

    ``values`` has shape ``(nt,) + grid.shape``.
    """

    values: np.ndarray
    grid: Grid
    t0: float = 0.0
    dt: float = 1.0
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[1:] != self.grid.shape:
            raise GridMismatch(f"series shape {v.shape} does not match grid {self.grid.shape}")
        if not self.dt > 0:
            raise GridMismatch("time step must be positive")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, grid: Grid, times: Sequence[float], name: str = "") -> "FieldSeries":
        times = np.asarray(times, dtype=float)
        dt = float(times[1] - times[0]) if times.size > 1 else 1.0
        mesh = grid.mesh()
        vals = np.array([np.asarray(f(*mesh, t), dtype=float) * np.ones(grid.shape) for t in times])
        return cls(vals, grid, float(times[0]), dt, name)

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def slice(self, i: int) -> ScalarField:
        return ScalarField(self.values[i], self.grid, self.name)

    def time_derivative(self) -> np.ndarray:
        """``dS/dt`` at every slice: forward difference for two slices,
        central (one-sided at the ends) for three or more."""
        if self.nt < 2:
            raise GridMismatch("time derivative needs at least two slices")
        return np.gradient(self.values, self.dt, axis=0, edge_order=1)


def integrate_grid(values, grid: Grid) -> float:
    """Trapezoidal integral over all grid axes."""
    out = np.asarray(values, dtype=float)
    for a in reversed(range(grid.ndim)):
        out = np.trapezoid(out, dx=grid.spacing[a], axis=a)
    return float(out)


def gradient(values, grid: Grid) -> list:
    """First derivatives along every axis (second-order everywhere)."""
    values = np.asarray(values, dtype=float)
    if grid.ndim == 1:
        return [np.gradient(values, grid.spacing[0], edge_order=2)]
    return list(np.gradient(values, *grid.spacing, edge_order=2))


def second_derivative(values, h: float, axis: int) -> np.ndarray:
    """Pure second derivative along one axis.

    Central three-point stencil inside, four-point one-sided stencil
    ``(2 f0 - 5 f1 + 4 f2 - f3) / h^2`` at the two edges.
    """
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def hessian(values, grid: Grid) -> np.ndarray:
    """All second derivatives, shape ``(ndim, ndim) + grid.shape``.

    Mixed partials apply the first-derivative stencil along each axis in
    turn; since the one-axis operators commute the result is symmetric.
    """
    values = np.asarray(values, dtype=float)
    d = grid.ndim
    out = np.empty((d, d) + values.shape)
    first = gradient(values, grid)
    for i in range(d):
        out[i, i] = second_derivative(values, grid.spacing[i], i)
        for j in range(i + 1, d):
            mixed = np.gradient(first[i], grid.spacing[j], axis=j, edge_order=2)
            out[i, j] = mixed
            out[j, i] = mixed
    return out


def laplacian(values, grid: Grid) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return sum(second_derivative(values, grid.spacing[a], a) for a in range(grid.ndim))
