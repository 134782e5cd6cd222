import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from morphobohm import entropy_fisher as ef
from morphobohm.errors import (
    DimensionMismatch,
    FDStepInvalid,
    NonPositiveMicrostates,
    QuadratureNotConverged,
    SingularFisher,
)
from morphobohm.validation import random_family


def fam(*W, dlogW=None, **kw):
    return ef.MicrostateFamily(list(W), dlogW, **kw)


# --- entropy vector and Jacobian --------------------------------------------


def test_entropy_constant_counts():
    f = fam(lambda t: 1.0, lambda t: 1.0, lambda t: 1.0)
    assert np.array_equal(ef.entropy_vector(f, [0.3]).s, [0.0, 0.0, 0.0])


def test_entropy_product_count():
    f = fam(lambda t: t[0] * t[1])
    assert ef.entropy_vector(f, [2.0, 3.0]).s == pytest.approx([np.log(6.0)])


def test_entropy_exponential_count_with_k():
    f = fam(lambda t: np.exp(t[0]))
    assert ef.entropy_vector(f, [0.7], k=2.0).s == pytest.approx([1.4])


def test_entropy_labels_default_and_custom():
    assert ef.entropy_vector(fam(lambda t: 2.0, lambda t: 3.0), [0.0]).labels == ("B1", "B2")
    f = fam(lambda t: 2.0, labels=["left"])
    assert ef.entropy_vector(f, [0.0]).labels == ("left",)
    with pytest.raises(DimensionMismatch):
        fam(lambda t: 2.0, labels=["a", "b"])


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_nonpositive_counts(bad):
    f = fam(lambda t: 1.0, lambda t: bad)
    with pytest.raises(NonPositiveMicrostates, match="B2"):
        ef.entropy_vector(f, [0.0])
    with pytest.raises(NonPositiveMicrostates):
        ef.fisher_matrix(f, [0.0])


def test_jacobian_exponential():
    assert ef.entropy_jacobian(fam(lambda t: np.exp(t[0])), [0.4]) == pytest.approx(np.array([[1.0]]))


def test_jacobian_square():
    assert ef.entropy_jacobian(fam(lambda t: t[0] ** 2), [4.0]) == pytest.approx(np.array([[0.5]]))


def test_jacobian_fd_matches_analytic():
    W = lambda t: np.exp(t[0] ** 2 / 2)
    fd = ef.entropy_jacobian(fam(W), [1.0])
    exact = ef.entropy_jacobian(fam(W, dlogW=[lambda t: np.array([t[0]])]), [1.0])
    assert exact == pytest.approx(np.array([[1.0]]))
    assert np.abs(fd - exact).max() < 1e-7


def test_jacobian_fd_second_order():
    W = lambda t: np.exp(np.sin(t[0])) + 0.2
    t0 = 0.9
    exact = np.cos(t0) * np.exp(np.sin(t0)) / W([t0])
    errs = [abs(ef.entropy_jacobian(fam(W, h_fd=h), [t0])[0, 0] - exact) for h in (0.04, 0.02, 0.01)]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_invalid_step():
    with pytest.raises(FDStepInvalid):
        ef.entropy_jacobian(fam(lambda t: 2.0 + t[0], h_fd=-1e-3), [0.0])


def test_dlogw_length_checked():
    with pytest.raises(DimensionMismatch):
        fam(lambda t: 1.0, dlogW=[lambda t: 0.0, lambda t: 0.0])


# --- observer-level Fisher --------------------------------------------------


@pytest.mark.parametrize("theta", [-1.3, 0.0, 2.5])
def test_fisher_single_gaussian_count(theta):
    F = ef.fisher_matrix(fam(lambda t: np.exp(t[0] ** 2 / 2)), [theta]).f
    assert F == pytest.approx(np.array([[theta**2]]), abs=1e-8)


def test_fisher_orthogonal_scores():
    F = ef.fisher_matrix(fam(lambda t: np.exp(t[0]), lambda t: np.exp(t[1])), [0.3, -0.2]).f
    assert np.allclose(F, np.eye(2), atol=1e-9)


def test_fisher_constant_counts():
    F = ef.fisher_matrix(fam(lambda t: 5.0, lambda t: 7.0), [0.3, 1.0]).f
    assert np.array_equal(F, np.zeros((2, 2)))


def test_fisher_unnormalized_sum():
    one = ef.fisher_matrix(fam(lambda t: np.exp(t[0])), [0.0]).f
    three = ef.fisher_matrix(fam(*[lambda t: np.exp(t[0])] * 3), [0.0]).f
    assert three == pytest.approx(3 * one)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fisher_psd_and_boltzmann_free(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 4))
    f = random_family(rng, int(rng.integers(1, 6)), p)
    th = rng.uniform(-1, 1, p)
    F = ef.fisher_matrix(f, th)
    assert np.array_equal(F.f, F.f.T)
    assert F.is_psd()
    # F is built from log-derivatives, so k never enters
    J = ef.entropy_jacobian(f, th)
    assert np.array_equal(F.f, 0.5 * ((J.T @ J) + (J.T @ J).T))
    s1 = ef.entropy_vector(f, th, 1.0).s
    assert np.allclose(ef.entropy_vector(f, th, 1.380649e-23).s, 1.380649e-23 * s1, rtol=1e-15)


# --- distribution level -----------------------------------------------------


def scipy_fisher(logpdf, theta, lo, hi, h=1e-5):
    """Independent oracle: scipy.integrate.quad over FD scores of a scipy logpdf."""
    theta = np.asarray(theta, float)
    p = theta.size

    def score(x):
        out = np.empty(p)
        for j in range(p):
            e = np.zeros(p)
            e[j] = h
            out[j] = (logpdf(x, theta + e) - logpdf(x, theta - e)) / (2 * h)
        return out

    F = np.empty((p, p))
    for a in range(p):
        for b in range(p):
            F[a, b] = integrate.quad(lambda x: np.exp(logpdf(x, theta)) * score(x)[a] * score(x)[b], lo, hi, limit=200)[0]
    return F


@pytest.mark.parametrize("mu, sigma", [(0.0, 1.0), (0.3, 1.7), (-2.0, 0.4)])
def test_gaussian_fisher_closed_form(mu, sigma):
    F = ef.score_fisher_oracle(ef.gaussian(), [mu, sigma]).f
    closed = np.diag([1 / sigma**2, 2 / sigma**2])
    assert np.abs(F - closed).max() / np.abs(closed).max() < 1e-6
    ref = scipy_fisher(lambda x, t: stats.norm.logpdf(x, t[0], t[1]), [mu, sigma], mu - 12 * sigma, mu + 12 * sigma)
    assert np.allclose(F, ref, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_exponential_fisher(lam):
    F = ef.score_fisher_oracle(ef.exponential(), [lam]).f
    assert F[0, 0] == pytest.approx(1 / lam**2, rel=1e-6)


def test_location_invariance():
    a = ef.score_fisher_oracle(ef.gaussian(), [0.0, 1.3]).f
    b = ef.score_fisher_oracle(ef.gaussian(), [5.0, 1.3]).f
    assert np.abs(a - b).max() < 1e-8


def test_uniform_formal_fisher():
    F = ef.score_fisher_oracle(ef.uniform(), [0.0, 2.0]).f
    assert np.allclose(F, np.array([[1, -1], [-1, 1]]) / 4.0, atol=1e-12)


def test_quadrature_not_converged():
    with pytest.raises(QuadratureNotConverged):
        ef.score_fisher_oracle(ef.gaussian(), [0.0, 1e-3], n_points=11)


# --- Cramer-Rao -------------------------------------------------------------


def test_gap_equality_case():
    F = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert ef.cramer_rao_gap(F, np.linalg.inv(F)) == pytest.approx(0.0, abs=1e-14)


def test_gap_identity():
    assert ef.cramer_rao_gap(np.eye(2), 2 * np.eye(2)) == pytest.approx(1.0)


def test_gap_diagonal():
    assert ef.cramer_rao_gap(np.diag([4.0, 1.0]), np.diag([0.3, 1.5])) == pytest.approx(0.05)


def test_gap_accepts_fisher_matrix_object():
    F = ef.FisherMatrix(np.diag([4.0, 1.0]), np.zeros(2))
    assert ef.cramer_rao_gap(F, np.diag([0.3, 1.5])) == pytest.approx(0.05)


def test_gap_errors():
    with pytest.raises(SingularFisher):
        ef.cramer_rao_gap(np.diag([1.0, 0.0]), np.eye(2))
    with pytest.raises(DimensionMismatch):
        ef.cramer_rao_gap(np.eye(2), np.eye(3))


# --- Monte Carlo covariance ---------------------------------------------------


def test_point_mass_zero_covariance():
    S = ef.mc_estimator_covariance(ef.point_mass(), [1.5], lambda x: np.array([x.mean()]), 100, 20, 0)
    assert np.array_equal(S, np.zeros((1, 1)))


def test_sample_mean_variance():
    S = ef.mc_estimator_covariance(ef.gaussian(), [0.0, 1.0], lambda x: x.mean(), 10_000, 1_000, 11)
    assert 0.8e-4 <= S[0, 0] <= 1.2e-4


def test_mc_deterministic():
    args = (ef.gaussian(), [0.0, 1.0], lambda x: np.array([x.mean(), x.std()]), 500, 50, 2024)
    a = ef.mc_estimator_covariance(*args)
    b = ef.mc_estimator_covariance(*args)
    assert np.array_equal(a, b)
    c = ef.mc_estimator_covariance(*args[:-1], 2025)
    assert not np.array_equal(a, c)


def test_trial_streams_are_order_independent():
    a = ef.trial_rng(5, 3).random(4)
    _ = ef.trial_rng(5, 0).random(100)
    assert np.array_equal(ef.trial_rng(5, 3).random(4), a)


def test_mc_rejects_bad_counts():
    with pytest.raises(ValueError):
        ef.mc_estimator_covariance(ef.gaussian(), [0.0, 1.0], np.mean, 0, 5, 0)


def test_cramer_rao_exponential_mle():
    lam, n, T = 2.0, 200, 400
    F = ef.score_fisher_oracle(ef.exponential(), [lam]).f
    S = ef.mc_estimator_covariance(ef.exponential(), [lam], lambda x: np.array([1 / x.mean()]), n, T, 9)
    assert ef.cramer_rao_gap(F * n, S) >= -3 * ef.covariance_stderr(S, T)


def test_covariance_stderr_formula():
    assert ef.covariance_stderr(np.diag([2.0, 1.0]), 9) == pytest.approx(2.0 * 0.5)
