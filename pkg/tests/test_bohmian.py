import numpy as np
import pytest
from scipy import stats

from morphobohm import bohmian as bm
from morphobohm.errors import EmptyEnsemble, StepInvalid
from morphobohm.fields import FieldSeries, Grid, ScalarField
from morphobohm.quantum_potential import PhysicalConstants


def test_plane_wave_straight_lines():
    p, m = 1.5, 2.0
    x0 = np.linspace(-1, 1, 7)
    ens = bm.bohmian_trajectories(
        None, x0, 0.1, 2.0, PhysicalConstants(m=m), grad_S=lambda x, t: np.full_like(x, p)
    )
    assert np.allclose(ens.final[:, 0], x0 + p / m * 2.0, atol=1e-13)
    assert np.allclose(ens.times, np.linspace(0, 2, 21))


def test_plane_wave_phase_callable():
    ens = bm.bohmian_trajectories(lambda x, t: 0.7 * x[:, 0], np.array([0.0, 1.0]), 0.05, 1.0)
    assert np.allclose(ens.final[:, 0], [0.7, 1.7], atol=1e-9)


def test_stationary_state_is_static():
    g = Grid.from_bounds(-3, 3, 0.1)
    S = FieldSeries.from_function(lambda x, t: 0 * x - 0.5 * t, g, [0.0, 0.5, 1.0])
    x0 = np.array([-1.2, 0.0, 2.5])
    ens = bm.bohmian_trajectories(S, x0, 0.01, 1.0)
    assert np.array_equal(ens.final[:, 0], x0)
    assert not ens.exited.any()


def test_field_series_plane_wave_2d():
    g = Grid.from_bounds([-5, -5], [5, 5], 0.25)
    S = FieldSeries.from_function(lambda x, y, t: 0.5 * x - 0.25 * y + 0 * t, g, [0.0, 2.0])
    ens = bm.bohmian_trajectories(S, np.array([[0.0, 0.0], [1.0, -1.0]]), 0.1, 2.0)
    assert np.allclose(ens.final, [[1.0, -0.5], [2.0, -1.5]], atol=1e-12)


@pytest.mark.parametrize("sigma, x_start", [(1.0, 0.8), (0.5, -0.3), (2.0, 3.0)])
def test_free_packet_spreading_law(sigma, x_start):
    pk = bm.GaussianPacket(0.0, sigma, 0.0)
    ens = bm.bohmian_trajectories(
        None, np.array([x_start]), 1e-2, 1.0, grad_S=lambda x, t: bm.phase_gradient(pk, x, t)
    )
    exact = x_start * np.sqrt(1 + 1.0 / (4 * sigma**4))
    assert abs(ens.final[0, 0] - exact) / abs(exact) < 1e-3


def test_exact_trajectory_with_drift():
    pk = bm.GaussianPacket(1.0, 0.7, 2.0, PhysicalConstants(m=2.0))
    ens = bm.bohmian_trajectories(
        None, np.array([1.5]), 1e-2, 1.0, pk.consts, grad_S=lambda x, t: bm.phase_gradient(pk, x, t)
    )
    assert ens.final[0, 0] == pytest.approx(pk.exact_trajectory(1.5, 1.0), rel=1e-6)


def test_packet_density_is_normal():
    pk = bm.GaussianPacket(0.4, 0.6, 1.0)
    x = np.linspace(-4, 5, 101)
    rho = np.abs(pk.psi(x, 1.3)) ** 2
    ref = stats.norm.pdf(x, 0.4 + 1.3, pk.width(1.3))
    assert np.allclose(rho, ref, rtol=1e-12, atol=1e-15)


def test_equivariance_free_packet():
    pk = bm.GaussianPacket(0.0, 1.0, 0.0)
    g = Grid.from_bounds(-8, 8, 1e-3)
    rho0 = ScalarField(np.abs(pk.psi(g.axis(0), 0.0)) ** 2, g)
    x0 = bm.sample_positions(rho0, 10_000, seed=3)
    ens = bm.bohmian_trajectories(None, x0, 0.05, 2.0, grad_S=lambda x, t: bm.phase_gradient(pk, x, t))
    edges = np.linspace(-5, 5, 41)
    counts, _ = np.histogram(ens.final[:, 0], edges)
    expected = np.diff(stats.norm.cdf(edges, 0.0, pk.width(2.0)))
    assert 0.5 * np.abs(counts / counts.sum() - expected).sum() < 0.05


def test_sampling_matches_distribution():
    g = Grid.from_bounds(-6, 6, 1e-3)
    rho = ScalarField(stats.norm.pdf(g.axis(0), 0.5, 1.2), g)
    x = bm.sample_positions(rho, 4000, seed=1)[:, 0]
    assert stats.kstest(x, stats.norm(0.5, 1.2).cdf).pvalue > 1e-3


def test_sampling_2d_inside_grid():
    g = Grid.from_bounds([-3, -3], [3, 3], 0.05)
    rho = ScalarField.from_function(lambda x, y: np.exp(-(x**2) - 2 * y**2), g)
    pts = bm.sample_positions(rho, 500, seed=8)
    assert pts.shape == (500, 2)
    assert np.all(np.abs(pts) <= 3)
    assert abs(pts[:, 0].var() / pts[:, 1].var() - 2.0) < 0.5


def test_determinism():
    g = Grid.from_bounds(-4, 4, 0.01)
    rho = ScalarField(np.exp(-g.axis(0) ** 2), g)
    a = bm.sample_positions(rho, 50, seed=7)
    assert np.array_equal(a, bm.sample_positions(rho, 50, seed=7))
    assert not np.array_equal(a, bm.sample_positions(rho, 50, seed=8))
    # each particle has its own stream
    assert np.array_equal(bm.sample_positions(rho, 10, seed=7), a[:10])


def test_step_invalid():
    for dt in (0.0, -0.1, np.nan):
        with pytest.raises(StepInvalid):
            bm.bohmian_trajectories(lambda x, t: x[:, 0], np.zeros(3), dt, 1.0)
    with pytest.raises(StepInvalid):
        bm.bohmian_trajectories(lambda x, t: x[:, 0], np.zeros(3), 0.3, 1.0)


def test_empty_ensemble():
    with pytest.raises(EmptyEnsemble):
        bm.bohmian_trajectories(lambda x, t: x[:, 0], np.zeros(0), 0.1, 1.0)
    g = Grid.from_bounds(0, 1, 0.1)
    with pytest.raises(EmptyEnsemble):
        bm.sample_positions(ScalarField(np.ones(11), g), 0, 1)


def test_particles_frozen_at_boundary():
    ens = bm.bohmian_trajectories(
        None, np.array([0.0, 0.5]), 0.1, 3.0, grad_S=lambda x, t: np.ones_like(x), bounds=[(-1.0, 1.2)]
    )
    assert np.array_equal(ens.exited, [True, True])
    assert np.array_equal(ens.final[:, 0], [1.2, 1.2])
    with pytest.raises(ValueError):
        bm.bohmian_trajectories(None, np.array([2.0]), 0.1, 1.0, grad_S=lambda x, t: x, bounds=[(-1.0, 1.0)])


def test_record_every_keeps_final():
    ens = bm.bohmian_trajectories(None, np.zeros(2), 0.1, 1.0, grad_S=lambda x, t: np.ones_like(x), record_every=3)
    assert np.allclose(ens.times, [0, 0.3, 0.6, 0.9, 1.0])
    assert ens.paths.shape == (5, 2, 1)


# --- double slit ------------------------------------------------------------


@pytest.fixture(scope="module")
def slit():
    return bm.double_slit_scenario(seed=42)


def test_double_slit_no_crossings(slit):
    assert slit.ensemble.n_particles == 10_000
    assert slit.axis_crossings == 0


def test_double_slit_histogram_matches_density(slit):
    assert slit.tv_distance < 0.05
    assert slit.expected.sum() == pytest.approx(1.0, abs=1e-3)


def test_double_slit_histogram_symmetric(slit):
    # initial ensemble is mirrored, so the counts are exactly symmetric
    assert np.array_equal(slit.counts, slit.counts[::-1])


def test_double_slit_one_slit_closed_changes_q(slit):
    y = slit.grid.axis(0)
    overlap = np.abs(y) < 1.0
    assert np.abs(slit.Q.values - slit.Q_one_slit.values)[overlap].max() > 0


def test_double_slit_rejects_bad_params():
    with pytest.raises(ValueError):
        bm.double_slit_scenario(d=0.0)
    with pytest.raises(EmptyEnsemble):
        bm.double_slit_scenario(n_particles=0)
