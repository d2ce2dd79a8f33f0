"""Named integrand generators used by experiment configs."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .norms import Integrand
from .random_measure import BernoulliCellsModel, PoissonModel, replica_stream

__all__ = ["FAMILIES", "cell_times", "cell_marks", "make_integrand"]


def cell_times(model):
    """A representative time per cell: midpoints for Poisson, event times for Bernoulli."""
    if isinstance(model, PoissonModel):
        start, end = model.cell_bounds()
        return 0.5 * (start + end)
    return np.asarray(model.times, dtype=float)


def cell_marks(model):
    if isinstance(model, PoissonModel):
        return np.tile(np.arange(model.n_marks), model.rates.shape[0])
    return np.asarray(model.marks, dtype=int)


def constant(model, grid, scale=1.0):
    return np.full((model.n_cells, grid.size), float(scale))


def separable(model, grid, scale=1.0, decay=2.0, mark_sign=True, space_slope=1.5):
    """``scale * exp(-decay t / T) * b(mark) * s(x)``; ``b`` alternates sign
    and decays in the mark index, ``s`` is linear across the grid."""
    t = cell_times(model) / model.horizon
    m = cell_marks(model)
    time_part = np.exp(-decay * t)
    mark_part = (np.where(m % 2 == 1, -1.0, 1.0) if mark_sign else 1.0) / (1.0 + m)
    space_part = 1.0 - space_slope * np.linspace(0.0, 1.0, grid.size)
    return scale * np.outer(time_part * mark_part, space_part)


def single_cell_spike(model, grid, scale=1.0, cell=None, point=0):
    """All mass on one (cell, point); by default the cell with the largest nu-mass."""
    nu = model.nu_grid().weights
    c = int(np.argmax(nu)) if cell is None else int(cell)
    if not (0 <= c < model.n_cells and 0 <= int(point) < grid.size):
        raise InvalidInputError("spike location outside the model/grid")
    g = np.zeros((model.n_cells, grid.size))
    g[c, int(point)] = float(scale)
    return g


def heavy_tail(model, grid, scale=1.0, tail=1.5, seed=0):
    """Pareto quantiles with tail exponent ``tail``, scattered over the entries
    by a seeded permutation with random signs."""
    if not tail > 0:
        raise InvalidInputError("tail exponent must be positive")
    n = model.n_cells * grid.size
    u = (np.arange(n) + 0.5) / n
    mags = (1.0 - u) ** (-1.0 / float(tail))
    rng = replica_stream(int(seed), 0)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return scale * (signs * mags[rng.permutation(n)]).reshape(model.n_cells, grid.size)


def random_normal(model, grid, scale=1.0, seed=0):
    """Independent standard normal entries from a seeded stream."""
    rng = replica_stream(int(seed), 1)
    return float(scale) * rng.standard_normal((model.n_cells, grid.size))


FAMILIES = {
    "constant": constant,
    "separable": separable,
    "single_cell_spike": single_cell_spike,
    "heavy_tail": heavy_tail,
    "random_normal": random_normal,
}


def make_integrand(generator, model, grid, label="", **params):
    try:
        fn = FAMILIES[generator]
    except KeyError:
        raise InvalidInputError(
            f"unknown integrand family {generator!r}; known families: {', '.join(sorted(FAMILIES))}"
        ) from None
    return Integrand(fn(model, grid, **params), label or generator)
