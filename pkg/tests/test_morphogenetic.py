import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from morphobohm import morphogenetic as mg
from morphobohm.errors import DimensionMismatch, FDStepInvalid, RankDeficient


# rounding floor of second differences at the default step: eps * |y| / h^2
FD_NOISE = 1e-4


def normal_equation_pinv(J):
    J = np.asarray(J, float)
    return np.linalg.inv(J.T @ J) @ J.T


# --- pseudo-inverse ---------------------------------------------------------


def test_pinv_identity():
    assert np.allclose(mg.pseudo_inverse(np.eye(2)), np.eye(2), atol=1e-15)


def test_pinv_column_of_ones():
    assert np.allclose(mg.pseudo_inverse([[1.0], [1.0]]), [[0.5, 0.5]], atol=1e-15)


def test_pinv_embedding():
    J = [[1, 0], [0, 1], [0, 0]]
    assert np.allclose(mg.pseudo_inverse(J), [[1, 0, 0], [0, 1, 0]], atol=1e-15)


def test_pinv_matches_normal_equations_and_numpy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = rng.integers(1, 9)
        n = rng.integers(1, m + 1)
        J = rng.standard_normal((m, n))
        ref = normal_equation_pinv(J)
        assert np.allclose(mg.pseudo_inverse(J), ref, atol=1e-8)
        assert np.allclose(mg.pseudo_inverse(J), np.linalg.pinv(J), atol=1e-8)


def test_pinv_rejects_wide_matrix():
    with pytest.raises(RankDeficient):
        mg.pseudo_inverse(np.ones((2, 3)))


def test_pinv_rejects_rank_deficient():
    with pytest.raises(RankDeficient):
        mg.pseudo_inverse([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])


def test_pinv_rejects_ill_conditioned():
    J = np.array([[1.0, 0.0], [0.0, 1e-7], [0.0, 0.0]])  # cond(J^T J) = 1e14
    with pytest.raises(RankDeficient):
        mg.pseudo_inverse(J)
    J[1, 1] = 1e-5  # cond 1e10 is fine
    mg.pseudo_inverse(J)


def test_pinv_rejects_3d_input():
    with pytest.raises(DimensionMismatch):
        mg.pseudo_inverse(np.ones((2, 2, 2)))


@st.composite
def full_rank_jacobians(draw):
    m = draw(st.integers(1, 8))
    n = draw(st.integers(1, m))
    J = draw(arrays(np.float64, (m, n), elements=st.floats(-10, 10, allow_nan=False)))
    s = np.linalg.svd(J, compute_uv=False)
    assume(s[-1] > 1e-3 * max(s[0], 1.0))
    return J


@settings(max_examples=150, deadline=None)
@given(full_rank_jacobians())
def test_moore_penrose_identities(J):
    Jp = mg.pseudo_inverse(J)
    scale = max(1.0, np.abs(J).max() * np.abs(Jp).max())
    assert np.abs(J @ Jp @ J - J).max() < 1e-9 * scale * max(1.0, np.abs(J).max())
    assert np.abs(Jp @ J @ Jp - Jp).max() < 1e-9 * scale * max(1.0, np.abs(Jp).max())
    assert np.abs(Jp @ J - np.eye(J.shape[1])).max() < 1e-9 * scale
    # J J+ is symmetric (fourth Penrose condition)
    P = J @ Jp
    assert np.abs(P - P.T).max() < 1e-9 * scale


# --- metric and projector ---------------------------------------------------


def test_metric_identity():
    M = mg.metric_tensor(np.eye(3))
    assert np.array_equal(M.g, np.eye(3))
    assert np.allclose(M.g_inv, np.eye(3), atol=1e-15)


def test_metric_column_of_ones():
    M = mg.metric_tensor([[1.0], [1.0]])
    assert np.allclose(M.g, [[2.0]])
    assert np.allclose(M.g_inv, [[0.5]])


def test_metric_3x2():
    M = mg.metric_tensor([[1, 2], [3, 4], [5, 6]])
    assert np.array_equal(M.g, [[35, 44], [44, 56]])
    assert np.allclose(M.g_inv @ M.g, np.eye(2), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(full_rank_jacobians())
def test_metric_invariants(J):
    M = mg.metric_tensor(J)
    assert np.array_equal(M.g, M.g.T)
    assert np.linalg.eigvalsh(M.g)[0] > 0
    cond = np.linalg.cond(M.g)
    assert np.abs(M.g_inv @ M.g - np.eye(J.shape[1])).max() < 1e-13 * cond + 1e-12


def test_projector_square_is_identity():
    J = np.array([[2.0, 1.0], [0.5, 3.0]])
    assert np.allclose(mg.projection_operator(J).q, np.eye(2), atol=1e-14)


def test_projector_column_of_ones():
    P = mg.projection_operator([[1.0], [1.0]])
    assert np.allclose(P.q, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    assert np.allclose(P([1.0, -1.0]), [0.0, 0.0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(full_rank_jacobians())
def test_projector_invariants(J):
    Q = mg.projection_operator(J).q
    ref = J @ normal_equation_pinv(J)
    assert np.abs(Q @ Q - Q).max() < 1e-10
    assert np.abs(Q - Q.T).max() < 1e-12
    assert np.isclose(np.trace(Q), J.shape[1], atol=1e-10)
    assert np.abs(Q @ J - J).max() < 1e-10 * max(1.0, np.abs(J).max())
    assert np.abs(Q - ref).max() < 1e-6


# --- components and length --------------------------------------------------


def test_components_identity():
    c = mg.components(np.eye(2), [3.0, 4.0])
    assert np.allclose(c["covariant"], [3, 4]) and np.allclose(c["contravariant"], [3, 4])


@pytest.mark.parametrize("v, cov, contra", [((1, 1), [2.0], [1.0]), ((1, 0), [1.0], [0.5])])
def test_components_column_of_ones(v, cov, contra):
    c = mg.components([[1.0], [1.0]], np.array(v, float))
    assert np.allclose(c["covariant"], cov)
    assert np.allclose(c["contravariant"], contra)


def test_components_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mg.components(np.eye(2), [1.0, 2.0, 3.0])


def test_quadratic_length_examples():
    assert mg.quadratic_length(np.eye(2), [3.0, 4.0]) == pytest.approx(25.0, abs=1e-12)
    assert mg.quadratic_length([[1.0], [1.0]], [1.0, 1.0]) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(full_rank_jacobians(), st.integers(0, 2**32 - 1))
def test_quadratic_length_is_projected_norm(J, seed):
    v = np.random.default_rng(seed).standard_normal(J.shape[0])
    s2 = mg.quadratic_length(J, v)
    Q = mg.projection_operator(J).q
    ref = np.sum((Q @ v) ** 2)
    assert s2 == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert mg.quadratic_length(J, 2 * v) == pytest.approx(4 * s2, rel=1e-12, abs=1e-12)


# --- Christoffel terms and covariant derivative -----------------------------


def test_christoffel_linear_map_vanishes():
    A = np.array([[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]])
    G = mg.christoffel_terms(mg.SmoothMap(lambda x: A @ x), np.array([0.3, -0.2]))
    assert np.abs(G).max() < 1e-5


def test_christoffel_quadratic():
    G = mg.christoffel_terms(mg.SmoothMap(lambda x: np.array([x[0] ** 2, x[0]])), [1.0])
    assert G[0, 0, 0] == pytest.approx(2.0, abs=1e-4)
    assert G[1, 0, 0] == pytest.approx(0.0, abs=1e-4)


def test_christoffel_trig():
    G = mg.christoffel_terms(mg.SmoothMap(lambda x: np.array([np.sin(x[0]), np.cos(x[0])])), [0.0])
    assert np.allclose(G[:, 0, 0], [0.0, -1.0], atol=1e-5)


def test_christoffel_symmetric_and_analytic_mode():
    def hess(x):
        return np.array([[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]])

    y = lambda x: np.array([x[0] ** 2, x[1], x[0] * x[1]])
    fd = mg.christoffel_terms(mg.SmoothMap(y), [0.7, -1.2])
    exact = mg.christoffel_terms(mg.SmoothMap(y, hessian=hess), [0.7, -1.2])
    assert np.array_equal(fd, np.swapaxes(fd, 1, 2))
    assert np.abs(fd - exact).max() < 1e-5


def test_christoffel_fd_second_order():
    x0 = np.array([0.4, -0.7])
    y = lambda x: np.array([np.sin(x[0]) * x[1], np.exp(0.3 * x[0] * x[1]), np.cos(x[1])])
    a, b = x0
    e = np.exp(0.3 * a * b)
    exact = np.array(
        [
            [[-np.sin(a) * b, np.cos(a)], [np.cos(a), 0.0]],
            [[0.09 * b * b * e, 0.3 * e + 0.09 * a * b * e], [0.3 * e + 0.09 * a * b * e, 0.09 * a * a * e]],
            [[0.0, 0.0], [0.0, -np.cos(b)]],
        ]
    )
    errs = [np.abs(mg.christoffel_terms(mg.SmoothMap(y, h_fd=h), x0) - exact).max() for h in (4e-2, 2e-2, 1e-2)]
    for e1, e2 in zip(errs, errs[1:]):
        assert 3.5 <= e1 / e2 <= 4.5


@pytest.mark.parametrize("h", [0.0, -1e-3, np.nan])
def test_invalid_fd_step(h):
    fmap = mg.SmoothMap(lambda x: np.array([x[0] ** 2, x[0]]), h_fd=h)
    with pytest.raises(FDStepInvalid):
        mg.christoffel_terms(fmap, [1.0])
    with pytest.raises(FDStepInvalid):
        mg.covariant_derivative(mg.SmoothMap(lambda x: np.array([x[0], x[0] ** 2])), lambda x: x, [1.0], h_fd=h)


def test_covariant_derivative_linear_identity_field():
    A = np.array([[1.0, 2.0], [0.0, 1.0], [1.0, 1.0]])
    D = mg.covariant_derivative(mg.SmoothMap(lambda x: A @ x), lambda x: x, np.array([0.2, 0.9]))
    assert np.allclose(D, np.eye(2), atol=FD_NOISE)


def test_covariant_derivative_linear_constant_field():
    A = np.array([[1.0, 2.0], [0.0, 1.0], [1.0, 1.0]])
    D = mg.covariant_derivative(mg.SmoothMap(lambda x: A @ x), lambda x: np.array([1.0, -2.0]), np.array([0.2, 0.9]))
    assert np.abs(D).max() < FD_NOISE


def _curved_map():
    y = lambda x: np.array([x[0] ** 2, x[1], x[0] * x[1]])
    jac = lambda x: np.array([[2 * x[0], 0.0], [0.0, 1.0], [x[1], x[0]]])
    return y, jac


def test_covariant_derivative_hand_value():
    # J = [[2,0],[0,1],[1,1]] at (1,1); J+ rows (4,-1,1)/9 and (-2,5,4)/9
    y, _ = _curved_map()
    D = mg.covariant_derivative(mg.SmoothMap(y), lambda x: np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert np.allclose(D, [[8 / 9, 1 / 9], [-4 / 9, 4 / 9]], atol=1e-6)


def test_covariant_derivative_product_rule_oracle():
    # J+ d_k(J v) = d_k v + J+ (d_k J) v, evaluated without any Hessian
    y, jac = _curved_map()
    v = lambda x: np.array([np.sin(x[0]), x[0] * x[1]])
    x0 = np.array([0.8, -0.4])
    Jv = lambda x: jac(x) @ v(x)
    oracle = mg.pseudo_inverse(jac(x0)) @ mg.fd_jacobian(Jv, x0, 1e-6)
    D = mg.covariant_derivative(mg.SmoothMap(y), v, x0)
    assert np.allclose(D, oracle, atol=1e-5)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-3, 3)), arrays(np.float64, 2, elements=st.floats(-2, 2)))
def test_covariant_derivative_linear_map_equals_jacobian(A, x0):
    s = np.linalg.svd(A, compute_uv=False)
    assume(s[-1] > 1e-2)
    v = lambda x: np.array([np.cos(x[0]) + x[1] ** 2, x[0] * x[1]])
    D = mg.covariant_derivative(mg.SmoothMap(lambda x: A @ x), v, x0)
    exact = np.array([[-np.sin(x0[0]), 2 * x0[1]], [x0[1], x0[0]]])
    assert np.abs(D - exact).max() < FD_NOISE * max(1.0, np.abs(A).max() * np.abs(x0).max())


def test_covariant_derivative_field_shape_checked():
    with pytest.raises(DimensionMismatch):
        mg.covariant_derivative(mg.SmoothMap(lambda x: np.array([x[0], x[1], x[0]])), lambda x: np.ones(3), [0.0, 0.0])


def test_default_fd_step_scales():
    assert np.allclose(mg.default_fd_step([0.1, -20.0]), [1e-5, 2e-4])
