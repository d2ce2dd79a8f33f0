import math

import numpy as np
import pytest

from lqjumps.families import make_integrand
from lqjumps.montecarlo import (
    Ensemble, bdg_check, estimate_lhs, hilbert_checks, isometry_check, moment_estimate, ratio_report,
)
from lqjumps.norms import Integrand, SpaceGrid
from lqjumps.random_measure import BernoulliCellsModel


def test_zero_integrand(poisson_model, grid3):
    est = estimate_lhs(np.zeros((poisson_model.n_cells, 3)), 2, 2, poisson_model, grid3, replicas=100)
    assert est.value == 0.0 and est.std_error == 0.0


def test_single_bernoulli_cell():
    model = BernoulliCellsModel([1.0], [0.5], 1.0)
    est = estimate_lhs([[1.0]], 2, 2, model, SpaceGrid([1.0]), replicas=1000)
    # |xi - 1/2| = 1/2 on every outcome
    assert est.value == pytest.approx(0.5, rel=1e-14)


def test_terminal_isometry(poisson_model, grid3, rng):
    g = rng.normal(size=(poisson_model.n_cells, 3))
    ens = Ensemble(poisson_model, 40_000, 3)
    est = estimate_lhs(g, 2, 2, poisson_model, grid3, terminal=True, ensemble=ens)
    pb = (g**2 * poisson_model.nu_grid().weights[:, None]).sum(axis=0) @ grid3.weights
    assert abs(est.moment - pb) <= 4 * est.moment_se


def test_ratio_rows(poisson_model, grid3):
    fams = [make_integrand("separable", poisson_model, grid3, "sep"),
            Integrand(np.zeros((poisson_model.n_cells, 3)), "zero"),
            make_integrand("constant", poisson_model, grid3, "flat")]
    rows = ratio_report(fams, [(3, 1.5), (1.5, 3)], poisson_model, grid3, replicas=2000, seed=1)
    assert [(r.p, r.q, r.family) for r in rows] == sorted((r.p, r.q, r.family) for r in rows)
    for r in rows:
        if r.family == "zero":
            assert math.isnan(r.ratio) and not r.violation
        else:
            assert 1 / 64 <= r.ratio <= 64


def test_scale_invariance(poisson_model, grid3):
    g = make_integrand("heavy_tail", poisson_model, grid3).values
    ens = Ensemble(poisson_model, 2000, 5)
    base = ratio_report([("g", g)], [(1.5, 3)], poisson_model, grid3, ensemble=ens)[0]
    four = ratio_report([("g", 4 * g)], [(1.5, 3)], poisson_model, grid3, ensemble=ens)[0]
    assert four.ratio == base.ratio
    ten = ratio_report([("g", 10 * g)], [(1.5, 3)], poisson_model, grid3, ensemble=ens)[0]
    assert ten.ratio == pytest.approx(base.ratio, rel=1e-10)


def test_isometry_band(poisson_model, grid3):
    g = make_integrand("separable", poisson_model, grid3)
    ratio, se = isometry_check(g, poisson_model, grid3, replicas=5000, seed=2)
    assert 1 - 3 * se <= ratio <= 4 + 3 * se


def test_hilbert_rows(poisson_model):
    grid = SpaceGrid([1.0])
    g = np.linspace(-1, 2, poisson_model.n_cells)
    rows = {r.inequality: r for r in hilbert_checks(g, 2.0, poisson_model, grid, replicas=3000)}
    assert all(r.applicable for r in rows.values())
    assert all(0 < r.ratio <= 64 for r in rows.values())
    rows = {r.inequality: r for r in hilbert_checks(g, 3.0, poisson_model, grid, replicas=3000)}
    assert not rows["sqh"].applicable and not rows["mejeto"].applicable and rows["mejo"].applicable
    zero = hilbert_checks(np.zeros(poisson_model.n_cells), 1.5, poisson_model, grid, replicas=100)
    assert all(r.trivial for r in zero if r.applicable)


def test_bdg_two_two(poisson_model, grid3):
    g = make_integrand("separable", poisson_model, grid3)
    rep = bdg_check(g, 2, 2, poisson_model, grid3, replicas=5000, seed=4)
    assert 1 - 3 * rep.power_ratio_se <= rep.power_ratio <= 4 + 3 * rep.power_ratio_se
    assert rep.lower_ratio * rep.upper_ratio == pytest.approx(1.0)


def test_standard_error_scaling(poisson_model, grid3):
    g = make_integrand("constant", poisson_model, grid3)
    a = estimate_lhs(g, 3, 2, poisson_model, grid3, replicas=5000, seed=6)
    b = estimate_lhs(g, 3, 2, poisson_model, grid3, replicas=20_000, seed=6)
    assert b.std_error / a.std_error == pytest.approx(0.5, rel=0.2)


def test_bootstrap_close_to_delta(rng):
    x = rng.exponential(size=5000)
    d = moment_estimate(x, 2.0, seed=1)
    b = moment_estimate(x, 2.0, seed=1, se_method="bootstrap")
    assert b.value == d.value
    assert b.std_error == pytest.approx(d.std_error, rel=0.3)
    assert moment_estimate(x, 2.0, seed=1, se_method="bootstrap").std_error == b.std_error


def test_workers_do_not_change_estimates(poisson_model, grid3):
    g = make_integrand("separable", poisson_model, grid3)
    a = estimate_lhs(g, 1.5, 3, poisson_model, grid3, replicas=3000, seed=8, workers=1)
    b = estimate_lhs(g, 1.5, 3, poisson_model, grid3, replicas=3000, seed=8, workers=8)
    assert a == b
