import numpy as np
import pytest

from lqjumps.integrator import davis_split, integrate_path, path_statistics, sup_lq
from lqjumps.norms import SpaceGrid, weighted_lq
from lqjumps.oracle import dense_grid_sup
from lqjumps.random_measure import BernoulliCellsModel, PointPattern, PoissonModel, replica_stream, sample, sample_batch


def test_zero_integrand(poisson_model, grid3):
    pattern = sample(poisson_model, replica_stream(0, 0))
    path = integrate_path(np.zeros((poisson_model.n_cells, 3)), pattern, poisson_model)
    assert sup_lq(path, 2.0, grid3) == 0.0
    assert np.all(path.terminal == 0.0)


def test_one_atom_compensated():
    model = PoissonModel.homogeneous(1.0, 1.0)
    path = integrate_path([[1.0]], PointPattern(np.array([0.4]), np.array([0])), model)
    assert path.terminal[0] == pytest.approx(0.0, abs=1e-15)
    assert sup_lq(path, 2.0, SpaceGrid([1.0])) == pytest.approx(0.6)


def test_sup_example():
    model = PoissonModel.homogeneous(0.5, 1.0)
    path = integrate_path([[3.0, 4.0]], PointPattern(np.array([0.25]), np.array([0])), model)
    assert sup_lq(path, 2.0, SpaceGrid([1.0, 1.0])) == pytest.approx(4.375, rel=1e-14)


def test_martingale_mean_and_isometry(poisson_model, grid3, rng):
    g = rng.normal(size=(poisson_model.n_cells, 3))
    batch = sample_batch(poisson_model, 21, 100_000)
    st = path_statistics(g, batch, [2.0], grid3)
    mean = st.terminal.mean(axis=0)
    se = st.terminal.std(axis=0, ddof=1) / np.sqrt(batch.replicas)
    assert np.all(np.abs(mean) <= 4 * se)
    # E [M,M]_T = <M,M>_T and E M_T^2 = <M,M>_T pointwise
    qv_se = st.qv.std(axis=0, ddof=1) / np.sqrt(batch.replicas)
    assert np.all(np.abs(st.qv.mean(axis=0) - st.pb) <= 4 * qv_se)
    sq = st.terminal**2
    assert np.all(np.abs(sq.mean(axis=0) - st.pb) <= 4 * sq.std(axis=0, ddof=1) / np.sqrt(batch.replicas))


@pytest.mark.parametrize("which", ["poisson", "bernoulli"])
def test_batch_equals_single_path(which, poisson_model, bernoulli_model, grid3, rng):
    model = poisson_model if which == "poisson" else bernoulli_model
    g = rng.normal(size=(model.n_cells, 3))
    batch = sample_batch(model, 3, 200)
    st = path_statistics(g, batch, [1.5, 4.0], grid3, chunk=37)
    for r in range(batch.replicas):
        path = integrate_path(g, batch.pattern(r), model)
        for q in (1.5, 4.0):
            assert st.sup[q][r] == pytest.approx(sup_lq(path, q, grid3), rel=1e-13, abs=1e-300)
        np.testing.assert_allclose(st.terminal[r], path.terminal, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("which", ["poisson", "bernoulli"])
def test_endpoint_sup_equals_dense_grid(which, poisson_model, bernoulli_model, grid3, rng):
    model = poisson_model if which == "poisson" else bernoulli_model
    g = rng.normal(size=(model.n_cells, 3))
    for r in range(20):
        pattern = sample(model, replica_stream(8, r))
        path = integrate_path(g, pattern, model)
        dense = dense_grid_sup(g, pattern, model, 2.5, grid3, n_grid=2000)
        assert abs(sup_lq(path, 2.5, grid3) - dense) <= 1e-12 * max(dense, 1.0)


def test_bernoulli_same_time_cells_grouped():
    model = BernoulliCellsModel([0.5, 0.5], [0.5, 0.5], 1.0)
    path = integrate_path([[1.0], [-1.0]], PointPattern(np.array([0.5]), np.array([0]), np.array([1, 0])), model)
    assert path.jumps.shape == (1, 1)
    assert path.jumps[0, 0] == pytest.approx(1.0)


def test_davis_examples():
    grid = SpaceGrid([1.0])
    split = davis_split([[1.0], [0.1], [5.0]], 2.0, grid)
    assert split.big_indices.tolist() == [0, 2]
    assert split.big_total_variation == pytest.approx(6.0)
    assert split.big_total_variation <= 2 * split.s_inf
    split = davis_split([[1.0], [1.0], [-1.0]], 2.0, grid)
    assert split.big_indices.tolist() == [0]
    assert davis_split(np.zeros((0, 1)), 2.0, grid).s_inf == 0.0


def test_davis_bound_and_sup_floor(poisson_model, grid3, rng):
    g = rng.standard_cauchy(size=(poisson_model.n_cells, 3))
    for r in range(300):
        path = integrate_path(g, sample(poisson_model, replica_stream(13, r)), poisson_model)
        split = davis_split(path.jumps, 3.0, grid3)
        assert split.big_total_variation <= 2 * split.s_inf
        sup = sup_lq(path, 3.0, grid3)
        assert sup >= weighted_lq(path.terminal, 3.0, grid3.weights)
        assert sup >= 0.5 * split.s_inf * (1 - 1e-14)
