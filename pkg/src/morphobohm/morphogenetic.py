"""Tensor calculus for rectangular Jacobians.

A smooth map ``y = y(x)`` from ``n`` sources to ``m >= n`` outputs has an
``m x n`` Jacobian ``J``.  Contravariant components of a vector ``dy`` are
recovered with the pseudo-inverse ``J+ = (J^T J)^-1 J^T``, covariant ones with
``J^T``, and ``J^T J`` plays the role of the metric tensor.  When ``m == n``
everything reduces to ordinary tensor calculus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, FDStepInvalid, RankDeficient

#: Largest accepted condition number of ``J^T J``.
COND_LIMIT = 1e12


def _as_jacobian(J) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if J.ndim == 1:
        J = J[:, None]
    if J.ndim != 2:
        raise DimensionMismatch(f"Jacobian must be 2-D, got shape {J.shape}")
    m, n = J.shape
    if m < n:
        raise RankDeficient(f"need at least as many rows as columns, got {m}x{n}")
    s = np.linalg.svd(J, compute_uv=False)
    if s[-1] == 0.0 or (s[0] / s[-1]) ** 2 > COND_LIMIT:
        raise RankDeficient(
            f"cond(J^T J) exceeds {COND_LIMIT:g} (singular values {s[0]:.3g}..{s[-1]:.3g})"
        )
    return J


@dataclass(frozen=True)
class MetricTensor:
    """Metric ``g = J^T J`` and its inverse."""

    g: np.ndarray
    g_inv: np.ndarray


@dataclass(frozen=True)
class ProjectionOperator:
    """Orthogonal projector ``Q = J (J^T J)^-1 J^T`` onto the column space of J."""

    q: np.ndarray

    def __call__(self, v) -> np.ndarray:
        return self.q @ np.asarray(v, dtype=float)


def pseudo_inverse(J) -> np.ndarray:
    """Left pseudo-inverse of a full-column-rank matrix.

    Computed from a reduced QR factorization, ``J = Q R`` so that
    ``J+ = R^-1 Q^T``, which avoids squaring the condition number the way the
    normal equations ``(J^T J)^-1 J^T`` would.

    Parameters
    ----------
    J : array_like, shape (m, n)
        Jacobian with ``m >= n``. A 1-D input is treated as a single column.

    Returns
    -------
    ndarray, shape (n, m)

    Raises
    ------
    RankDeficient
        If ``m < n`` or ``cond(J^T J) > 1e12``.
    """
    J = _as_jacobian(J)
    q, r = np.linalg.qr(J, mode="reduced")
    return np.linalg.solve(r, q.T)


def metric_tensor(J) -> MetricTensor:
    J = _as_jacobian(J)
    g = J.T @ J
    # enforce exact symmetry; the product is symmetric up to rounding only
    g = 0.5 * (g + g.T)
    jp = pseudo_inverse(J)
    g_inv = jp @ jp.T
    return MetricTensor(g=g, g_inv=0.5 * (g_inv + g_inv.T))


def projection_operator(J) -> ProjectionOperator:
    J = _as_jacobian(J)
    q, _ = np.linalg.qr(J, mode="reduced")
    p = q @ q.T
    return ProjectionOperator(q=0.5 * (p + p.T))


def components(J, v) -> dict[str, np.ndarray]:
    """Covariant ``J^T v`` and contravariant ``J+ v`` components of ``v``."""
    J = _as_jacobian(J)
    v = np.asarray(v, dtype=float)
    if v.shape != (J.shape[0],):
        raise DimensionMismatch(f"vector of length {J.shape[0]} expected, got shape {v.shape}")
    return {"covariant": J.T @ v, "contravariant": pseudo_inverse(J) @ v}


def quadratic_length(J, v) -> float:
    """Squared length ``S^2 = (J^T v)^T (J^T J)^-1 (J^T v)``.

    Equal to ``|Q v|^2`` where ``Q`` is the projector onto the column space.
    """
    c = components(J, v)
    return float(c["contravariant"] @ c["covariant"])


def default_fd_step(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 1e-5 * np.maximum(1.0, np.abs(x))


def _check_step(h) -> None:
    if np.any(~np.isfinite(h)) or np.any(np.asarray(h) <= 0):
        raise FDStepInvalid(f"finite-difference step must be positive, got {h}")


@dataclass(frozen=True)
class SmoothMap:
    """A map ``R^n -> R^m`` with optional analytic derivatives.

    ``jacobian(x)`` must return shape ``(m, n)`` and ``hessian(x)`` shape
    ``(m, n, n)``. When either is missing, central differences with step
    ``h_fd`` are used (per coordinate; the default scales with ``|x|``).
    """

    y: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_fd: Optional[float] = field(default=None)

    def _step(self, x: np.ndarray) -> np.ndarray:
        if self.h_fd is None:
            return default_fd_step(x)
        h = np.broadcast_to(np.asarray(self.h_fd, dtype=float), x.shape).copy()
        _check_step(h)
        return h

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.y(np.asarray(x, dtype=float)), dtype=float))

    def jac(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float).reshape(-1, x.size)
        return fd_jacobian(self, x, self._step(x))

    def hess(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float).reshape(-1, x.size, x.size)
        return fd_hessian(self, x, self._step(x))


def fd_jacobian(f: Callable, x, h) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``; shape ``(m, n)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    _check_step(h)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        fp = np.atleast_1d(np.asarray(f(x + e), dtype=float))
        fm = np.atleast_1d(np.asarray(f(x - e), dtype=float))
        cols.append((fp - fm) / (2.0 * h[j]))
    return np.stack(cols, axis=-1)


def fd_hessian(f: Callable, x, h) -> np.ndarray:
    """Second-order central-difference Hessians; shape ``(m, n, n)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    _check_step(h)
    n = x.size

    def ev(dx):
        return np.atleast_1d(np.asarray(f(x + dx), dtype=float))

    f0 = ev(np.zeros(n))
    out = np.empty((f0.size, n, n))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h[a]
        out[:, a, a] = (ev(ea) - 2.0 * f0 + ev(-ea)) / h[a] ** 2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = h[b]
            d = (ev(ea + eb) - ev(ea - eb) - ev(-ea + eb) + ev(-ea - eb)) / (4.0 * h[a] * h[b])
            out[:, a, b] = d
            out[:, b, a] = d
    return out


def christoffel_terms(fmap: SmoothMap, x) -> np.ndarray:
    """Second partials ``d^2 y_k / dx_h dx_j`` indexed ``[k, h, j]``.

    These are the connection coefficients that appear in the commutator of
    a derivative with ``J^T``. Symmetric in ``(h, j)`` by construction.
    """
    H = fmap.hess(x)
    return 0.5 * (H + np.swapaxes(H, 1, 2))


def covariant_derivative(fmap: SmoothMap, vfield: Callable, x, h_fd=None) -> np.ndarray:
    """Covariant derivative of a contravariant vector field under ``fmap``.

    Returns ``D[i, k] = dv^i/dx^k + v^p (d^2 y_j / dx^k dx^p) (J+)_{ij}``
    where ``J+`` is the pseudo-inverse of the map's Jacobian at ``x``. For a
    linear map the connection term vanishes and ``D`` is the plain Jacobian
    of ``vfield``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h_fd is None else np.broadcast_to(np.asarray(h_fd, float), x.shape)
    _check_step(h)
    v = np.atleast_1d(np.asarray(vfield(x), dtype=float))
    if v.shape != x.shape:
        raise DimensionMismatch(f"vector field must return shape {x.shape}, got {v.shape}")
    dv = fd_jacobian(vfield, x, h)
    jp = pseudo_inverse(fmap.jac(x))
    gamma = christoffel_terms(fmap, x)
    # connection[i, k] = sum_{j,p} jp[i, j] * gamma[j, k, p] * v[p]
    connection = np.einsum("ij,jkp,p->ik", jp, gamma, v)
    return dv + connection
