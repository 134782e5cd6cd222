"""Boltzmann entropy vectors, observer-level Fisher matrices and Cramer-Rao checks.

Each observer ``B_j`` sees a microstate count ``W_j(theta)`` and assigns the
entropy ``S_j = k log W_j``. The Jacobian of the log-counts with respect to
the parameters ``theta`` gives ``F = J^T J``. The distribution-level Fisher
matrix ``E[score score^T]`` is available separately through
:func:`score_fisher_oracle`; the two are never mixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    DimensionMismatch,
    FDStepInvalid,
    NonPositiveMicrostates,
    QuadratureNotConverged,
    SingularFisher,
)
from .morphogenetic import default_fd_step, fd_jacobian


@dataclass(frozen=True)
class MicrostateFamily:
    """n positive microstate-count functions of p parameters.

    Parameters
    ----------
    W : sequence of callables
        ``W[j](theta) -> float``, strictly positive on the domain.
    dlogW : sequence of callables, optional
        Analytic gradients ``d log W_j / d theta`` (length-p arrays). When
        omitted, central differences with step ``h_fd`` are used.
    labels : sequence of str, optional
        Observer identifiers; default ``B1, B2, ...``.
    h_fd : float, optional
        Finite-difference step; default ``1e-5 * max(1, |theta|)``.
    """

    W: Sequence[Callable]
    dlogW: Optional[Sequence[Callable]] = None
    labels: Optional[Sequence[str]] = None
    h_fd: Optional[float] = None

    def __post_init__(self):
        if self.dlogW is not None and len(self.dlogW) != len(self.W):
            raise DimensionMismatch("dlogW must have one gradient per W")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"B{j + 1}" for j in range(len(self.W))))
        elif len(self.labels) != len(self.W):
            raise DimensionMismatch("one label per observer required")

    @property
    def n(self) -> int:
        return len(self.W)

    def counts(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        w = np.array([float(Wj(theta)) for Wj in self.W])
        bad = ~(w > 0)
        if bad.any():
            names = [self.labels[j] for j in np.flatnonzero(bad)]
            raise NonPositiveMicrostates(f"W <= 0 for observers {names} at theta={theta}")
        return w

    def log_counts(self, theta) -> np.ndarray:
        return np.log(self.counts(theta))


@dataclass(frozen=True)
class EntropyVector:
    s: np.ndarray
    k: float = 1.0
    labels: tuple = ()


@dataclass(frozen=True)
class FisherMatrix:
    f: np.ndarray
    theta: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.f)[0])

    def is_psd(self) -> bool:
        scale = max(np.abs(self.f).max(), 1.0)
        return self.min_eigenvalue >= -1e-12 * scale


def entropy_vector(fam: MicrostateFamily, theta, k: float = 1.0) -> EntropyVector:
    return EntropyVector(s=k * fam.log_counts(theta), k=k, labels=tuple(fam.labels))


def entropy_jacobian(fam: MicrostateFamily, theta) -> np.ndarray:
    """``J[k, j] = d log W_k / d theta_j``, shape ``(n, p)``.

    The Boltzmann constant does not enter: it cancels in the Fisher
    construction.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    fam.counts(theta)  # domain check
    if fam.dlogW is not None:
        return np.array([np.atleast_1d(np.asarray(g(theta), dtype=float)) for g in fam.dlogW])
    h = default_fd_step(theta) if fam.h_fd is None else np.full(theta.shape, float(fam.h_fd))
    if np.any(h <= 0):
        raise FDStepInvalid(f"finite-difference step must be positive, got {fam.h_fd}")
    return fd_jacobian(fam.log_counts, theta, h)


def fisher_matrix(fam: MicrostateFamily, theta) -> FisherMatrix:
    """Observer-level Fisher matrix ``F = J^T J`` (no division by n)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    J = entropy_jacobian(fam, theta)
    F = J.T @ J
    return FisherMatrix(f=0.5 * (F + F.T), theta=theta)


# ---------------------------------------------------------------------------
# distribution level


@dataclass(frozen=True)
class ParametricDistribution:
    """A 1-D density ``rho(x; theta)`` with sampler and support.

    ``support(theta)`` returns finite integration bounds covering the
    effective support; ``sample(rng, theta, size)`` draws from the density.
    ``score`` (optional) returns ``d log rho / d theta`` with shape
    ``(p, len(x))``.
    """

    name: str
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support: Callable[[np.ndarray], tuple]
    sample: Callable[[np.random.Generator, np.ndarray, int], np.ndarray]
    score: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    param_names: tuple = field(default=())


def gaussian() -> ParametricDistribution:
    """Normal family, parameters ``(mu, sigma)``."""

    def density(x, th):
        mu, s = th
        return np.exp(-0.5 * ((x - mu) / s) ** 2) / (s * np.sqrt(2.0 * np.pi))

    def support(th):
        mu, s = th
        return mu - 10.0 * s, mu + 10.0 * s

    def sample(rng, th, size):
        return rng.normal(th[0], th[1], size)

    return ParametricDistribution("gaussian", density, support, sample, param_names=("mu", "sigma"))


def exponential() -> ParametricDistribution:
    """Exponential family with rate ``lambda``."""

    def density(x, th):
        lam = th[0]
        return lam * np.exp(-lam * x)

    def support(th):
        return 0.0, 50.0 / th[0]

    def sample(rng, th, size):
        return rng.exponential(1.0 / th[0], size)

    return ParametricDistribution("exponential", density, support, sample, param_names=("rate",))


def uniform() -> ParametricDistribution:
    """Uniform on ``[a, b]``.

    The support moves with the parameters, so the score-based Fisher value
    ``1/(b-a)^2`` per parameter is the formal one, not a Cramer-Rao bound.
    """

    def density(x, th):
        a, b = th
        return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)

    def support(th):
        return float(th[0]), float(th[1])

    def sample(rng, th, size):
        return rng.uniform(th[0], th[1], size)

    def score(x, th):
        a, b = th
        w = b - a
        return np.vstack([np.full_like(x, 1.0 / w), np.full_like(x, -1.0 / w)])

    return ParametricDistribution("uniform", density, support, sample, score=score, param_names=("a", "b"))


def point_mass() -> ParametricDistribution:
    """Degenerate distribution at ``x0``; sampling only (no density)."""

    def density(x, th):
        raise NotImplementedError("point mass has no density")

    def support(th):
        return float(th[0]), float(th[0])

    def sample(rng, th, size):
        return np.full(size, float(th[0]))

    return ParametricDistribution("point_mass", density, support, sample, param_names=("x0",))


DISTRIBUTIONS = {"gaussian": gaussian, "exponential": exponential, "uniform": uniform}


def _score_values(dist: ParametricDistribution, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if dist.score is not None:
        return np.atleast_2d(dist.score(x, theta))
    h = default_fd_step(theta)
    rows = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h[j]
        rows.append(
            (np.log(dist.density(x, theta + e)) - np.log(dist.density(x, theta - e))) / (2.0 * h[j])
        )
    return np.array(rows)


def _fisher_on_grid(dist, theta, n_points) -> np.ndarray:
    lo, hi = dist.support(theta)
    x = np.linspace(lo, hi, n_points)
    rho = dist.density(x, theta)
    sc = _score_values(dist, x, theta)
    integrand = rho[None, None, :] * sc[:, None, :] * sc[None, :, :]
    return integrate.simpson(integrand, x=x, axis=-1)


def score_fisher_oracle(
    dist: ParametricDistribution, theta, n_points: int = 20001, rtol: float = 1e-6
) -> FisherMatrix:
    """Distribution-level Fisher matrix ``E[score score^T]`` by quadrature.

    Simpson's rule on a fixed fine grid over the declared support; the grid
    is then doubled and the two results compared. A relative change above
    ``rtol`` raises :class:`QuadratureNotConverged`.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    coarse = _fisher_on_grid(dist, theta, n_points)
    fine = _fisher_on_grid(dist, theta, 2 * n_points - 1)
    scale = np.abs(fine).max()
    if scale > 0 and np.abs(fine - coarse).max() > rtol * scale:
        raise QuadratureNotConverged(
            f"refinement changed Fisher matrix by {np.abs(fine - coarse).max() / scale:.2e} relative"
        )
    return FisherMatrix(f=0.5 * (fine + fine.T), theta=theta)


def cramer_rao_gap(F, Sigma) -> float:
    """Smallest eigenvalue of ``Sigma - F^-1`` (Loewner order gap).

    Non-negative when the covariance ``Sigma`` respects the Cramer-Rao bound.
    """
    f = F.f if isinstance(F, FisherMatrix) else np.atleast_2d(np.asarray(F, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if Sigma.shape != f.shape:
        raise DimensionMismatch(f"Sigma shape {Sigma.shape} does not match F {f.shape}")
    s = np.linalg.svd(f, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise SingularFisher("Fisher matrix is not invertible")
    d = Sigma - np.linalg.inv(f)
    return float(np.linalg.eigvalsh(0.5 * (d + d.T))[0])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """PCG64 stream for one trial, derived from ``(seed, trial)`` only."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


def mc_estimator_covariance(
    dist: ParametricDistribution,
    theta,
    estimator: Callable[[np.ndarray], np.ndarray],
    n_samples: int,
    n_trials: int,
    seed: int,
) -> np.ndarray:
    """Empirical covariance of ``estimator`` over independent experiments.

    Each of the ``n_trials`` experiments draws ``n_samples`` values using its
    own PCG64 stream seeded by ``(seed, trial)``, so the result does not
    depend on evaluation order.
    """
    if int(n_samples) < 1 or int(n_trials) < 1:
        raise ValueError("n_samples and n_trials must be >= 1")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    est = np.array(
        [
            np.atleast_1d(np.asarray(estimator(dist.sample(trial_rng(seed, t), theta, int(n_samples))), float))
            for t in range(int(n_trials))
        ]
    )
    if n_trials == 1:
        return np.zeros((est.shape[1], est.shape[1]))
    return np.atleast_2d(np.cov(est, rowvar=False, ddof=1))


def covariance_stderr(Sigma, n_trials: int) -> float:
    """Largest Monte-Carlo standard error of the diagonal entries of ``Sigma``.

    Uses the normal-theory value ``var * sqrt(2 / (n_trials - 1))``.
    """
    d = np.diag(np.atleast_2d(Sigma))
    return float(np.max(d) * np.sqrt(2.0 / (n_trials - 1)))
