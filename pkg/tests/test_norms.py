import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lqjumps.errors import DimensionError, InvalidExponentError, InvalidInputError
from lqjumps.norms import (
    ATOMIC_NORMS, Integrand, NuGrid, SpaceGrid, atomic_norm, lq_norm, mixed_norm_2d, weighted_lq,
)


def test_lq_pythagoras():
    assert lq_norm([3.0, 4.0], 2, SpaceGrid([1.0, 1.0])) == pytest.approx(5.0, rel=1e-15)


@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 7.0])
def test_lq_single_point(q):
    assert lq_norm([-2.5], q, SpaceGrid([1.0])) == pytest.approx(2.5, rel=1e-15)


def test_lq_against_high_precision_sum():
    # (0.5 * 1 + 1 * 8 + 2 * 27)^(1/3), summed with 50 digits by mpmath
    expected = 3.9685026299204986869
    got = lq_norm([1.0, 2.0, 3.0], 3.0, SpaceGrid([0.5, 1.0, 2.0]))
    assert got == pytest.approx(expected, rel=1e-12)


def test_lq_errors():
    grid = SpaceGrid([1.0, 1.0])
    with pytest.raises(InvalidExponentError):
        lq_norm([1.0, 2.0], 0.5, grid)
    with pytest.raises(InvalidInputError):
        lq_norm([1.0, np.nan], 2.0, grid)
    with pytest.raises(DimensionError):
        lq_norm([1.0, 2.0, 3.0], 2.0, grid)


def test_grids_validate():
    with pytest.raises(InvalidInputError):
        SpaceGrid([1.0, 0.0])
    with pytest.raises(InvalidInputError):
        SpaceGrid([])
    with pytest.raises(InvalidInputError):
        NuGrid([1.0, -0.1])
    with pytest.raises(InvalidInputError):
        Integrand([[1.0, np.inf]])
    assert NuGrid([0.0, 2.0]).total_mass == 2.0


@pytest.mark.parametrize("which", ATOMIC_NORMS)
def test_atomic_zero(which):
    nu, grid = NuGrid([1.0, 2.0]), SpaceGrid([1.0, 3.0])
    assert atomic_norm(np.zeros((2, 2)), which, 1.5, 3.0, nu, grid) == 0.0


def test_tilde_one_term():
    assert atomic_norm([[1.0]], "Tilde", 3.0, 2.0, NuGrid([4.0]), SpaceGrid([1.0])) == pytest.approx(2.0)


def test_atomic_explicit_sums(rng):
    nu, grid = NuGrid(rng.uniform(0.1, 2, 4)), SpaceGrid(rng.uniform(0.1, 2, 3))
    g = rng.normal(size=(4, 3))
    p, q = 1.7, 3.2
    slices = (np.abs(g) ** q @ grid.weights) ** (1 / q)
    assert atomic_norm(g, "Lppq", p, q, nu, grid) == pytest.approx((slices**p @ nu.weights) ** (1 / p), rel=1e-13)
    assert atomic_norm(g, "Lpqq", p, q, nu, grid) == pytest.approx((slices**q @ nu.weights) ** (1 / q), rel=1e-13)
    square = np.sqrt(nu.weights @ g**2)
    assert atomic_norm(g, "Tilde", p, q, nu, grid) == pytest.approx((square**q @ grid.weights) ** (1 / q), rel=1e-13)


def test_q2_collapse_by_direct_summation(rng):
    for _ in range(20):
        nu, grid = NuGrid(rng.uniform(0.1, 2, 5)), SpaceGrid(rng.uniform(0.1, 2, 4))
        g = rng.normal(size=(5, 4))
        direct = np.sqrt(np.sum(g**2 * nu.weights[:, None] * grid.weights[None, :]))
        for p in (1.3, 2.0, 5.0):
            assert atomic_norm(g, "Tilde", p, 2.0, nu, grid) == pytest.approx(direct, rel=1e-12)
            assert atomic_norm(g, "Lpqq", p, 2.0, nu, grid) == pytest.approx(direct, rel=1e-12)


def test_atomic_errors():
    nu, grid = NuGrid([1.0]), SpaceGrid([1.0])
    with pytest.raises(InvalidExponentError):
        atomic_norm([[1.0]], "Lppq", 1.0, 2.0, nu, grid)
    with pytest.raises(DimensionError):
        atomic_norm(np.ones((2, 1)), "Lppq", 2.0, 2.0, nu, grid)
    with pytest.raises(InvalidInputError):
        atomic_norm([[1.0]], "L42", 2.0, 2.0, nu, grid)


def test_zero_mass_cells_ignored():
    nu, grid = NuGrid([0.0, 1.0]), SpaceGrid([1.0])
    g = np.array([[1e6], [2.0]])
    for which in ATOMIC_NORMS:
        assert atomic_norm(g, which, 3.0, 1.5, nu, grid) == pytest.approx(2.0)


finite = st.floats(-1e3, 1e3, allow_nan=False)
exponents = st.floats(1.01, 8.0)


@st.composite
def problems(draw):
    cells = draw(st.integers(1, 4))
    points = draw(st.integers(1, 4))
    nu = NuGrid(draw(arrays(float, cells, elements=st.floats(0.01, 5.0))))
    grid = SpaceGrid(draw(arrays(float, points, elements=st.floats(0.01, 5.0))))
    g = draw(arrays(float, (cells, points), elements=finite))
    h = draw(arrays(float, (cells, points), elements=finite))
    return nu, grid, g, h


@settings(max_examples=200, deadline=None)
@given(problems(), exponents, exponents, st.sampled_from([-2.0, 0.5, 10.0]), st.sampled_from(ATOMIC_NORMS))
def test_homogeneity(prob, p, q, c, which):
    nu, grid, g, _ = prob
    a = atomic_norm(c * g, which, p, q, nu, grid)
    b = abs(c) * atomic_norm(g, which, p, q, nu, grid)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(problems(), exponents, exponents, st.sampled_from(ATOMIC_NORMS))
def test_triangle(prob, p, q, which):
    nu, grid, g, h = prob
    lhs = atomic_norm(g + h, which, p, q, nu, grid)
    rhs = atomic_norm(g, which, p, q, nu, grid) + atomic_norm(h, which, p, q, nu, grid)
    assert lhs <= rhs + 1e-10 * max(rhs, 1.0)


@settings(max_examples=300, deadline=None)
@given(
    arrays(float, st.integers(1, 6), elements=st.floats(-100, 100)),
    st.lists(st.floats(1.0, 10.0), min_size=3, max_size=3, unique=True),
    st.sampled_from([0.5, 1.0, 2.0]),
    st.integers(0, 2**32 - 1),
)
def test_interpolation_lemma(f, exps, alpha, seed):
    r, q, p = sorted(exps)
    w = np.random.default_rng(seed).uniform(0.05, 3.0, f.size)
    lhs = weighted_lq(f, q, w) ** alpha
    rhs = weighted_lq(f, r, w) ** alpha + weighted_lq(f, p, w) ** alpha
    assert lhs <= rhs + 1e-10 * max(rhs, 1.0)


@settings(max_examples=300, deadline=None)
@given(
    arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(-100, 100)),
    st.floats(1.0, 8.0),
    st.floats(1.0, 8.0),
    st.integers(0, 2**32 - 1),
)
def test_holder_minkowski(f, a, b, seed):
    q, p = sorted((a, b))
    rng = np.random.default_rng(seed)
    wo, wi = rng.uniform(0.05, 3, f.shape[0]), rng.uniform(0.05, 3, f.shape[1])
    outer_p = mixed_norm_2d(f, p, q, wo, wi)
    outer_q = mixed_norm_2d(f.T, q, p, wi, wo)
    assert outer_p <= outer_q + 1e-10 * max(outer_q, 1.0)
