"""Brute-force references: exact expectations for small Bernoulli-cell models,
lattice search for sum-space norms, and dense-grid path suprema.

Nothing here calls the path engine or the conic solver; the oracles are
written directly from the definitions so they can be used to check them.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import DimensionError, DimensionTooLargeError, InvalidModelError
from .norms import Integrand, weighted_lq
from .random_measure import BernoulliCellsModel, PoissonModel
from .regimes import Intersect, MixedNorm, Scaled, SquareFunctionNorm, Sum

__all__ = [
    "MAX_ENUM_CELLS",
    "enumerate_outcomes",
    "enumerate_lhs",
    "grid_search_sum_norm",
    "dense_grid_sup",
]

MAX_ENUM_CELLS = 16


def _values(g):
    v = g.values if isinstance(g, Integrand) else np.asarray(g, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def enumerate_outcomes(g, model, q, grid):
    """All ``2^cells`` outcomes of a Bernoulli-cell model.

    Returns
    -------
    probs : ndarray (2^C,)
        Probability of each outcome vector.
    sups : ndarray (2^C,)
        ``sup_t |M_t|_{L_q}`` on each outcome's path.
    terminals : ndarray (2^C,)
        ``|M_T|_{L_q}`` on each outcome's path.
    """
    if not isinstance(model, BernoulliCellsModel):
        raise InvalidModelError("exact enumeration needs a Bernoulli-cell model")
    n = model.n_cells
    if n > MAX_ENUM_CELLS:
        raise DimensionTooLargeError(f"{n} cells exceeds the enumeration cap of {MAX_ENUM_CELLS}")
    v = _values(g)
    if v.shape != (n, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({n}, {grid.size})")
    xi = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float).reshape(-1, n)
    probs = np.prod(np.where(xi == 1, model.probs, 1.0 - model.probs), axis=1)
    state = np.zeros((xi.shape[0], grid.size))
    sups = np.zeros(xi.shape[0])
    for t in np.unique(model.times):
        for c in np.flatnonzero(model.times == t):
            state = state + (xi[:, c] - model.probs[c])[:, None] * v[c]
        sups = np.maximum(sups, weighted_lq(state, q, grid.weights, axis=1))
    return probs, sups, weighted_lq(state, q, grid.weights, axis=1)


def enumerate_lhs(g, model, p, q, grid, terminal=False):
    """Exact ``(E sup_t |M_t|_q^p)^(1/p)`` for a Bernoulli-cell model."""
    probs, sups, terminals = enumerate_outcomes(g, model, q, grid)
    x = terminals if terminal else sups
    return math.fsum(probs * x**p) ** (1.0 / p)


def _batch_value(node, h, nu, grid):
    """Norm of each ``h[b]`` for ``h`` of shape (B, cells, points)."""
    if isinstance(node, MixedNorm):
        slices = weighted_lq(h, node.inner, grid.weights, axis=-1)
        return weighted_lq(slices, node.outer, nu.weights, axis=-1)
    if isinstance(node, SquareFunctionNorm):
        square = weighted_lq(h, 2.0, nu.weights, axis=-2)
        return weighted_lq(square, node.q, grid.weights, axis=-1)
    if isinstance(node, Scaled):
        return node.factor * _batch_value(node.child, h, nu, grid)
    if isinstance(node, Intersect):
        return np.max([_batch_value(c, h, nu, grid) for c in node.children], axis=0)
    if isinstance(node, Sum):
        raise DimensionTooLargeError("nested sums are not supported by the lattice search")
    raise TypeError(f"unsupported norm node {node!r}")


def grid_search_sum_norm(g, parts, nu, grid, resolution=1e-4, points=25, window=3, max_dim=3):
    """Minimal lattice objective of ``sum_i N_i(h_i)`` over splits of ``g``.

    The first pass covers the box that must contain any improving split (the
    parts are lattice norms, so ``|h_i[c,x]| N_i(e_cx) <= N_i(h_i) <= min_j N_j(g)``);
    later passes refine a window of ``window`` lattice steps around the
    incumbent until the step falls below ``resolution * max|g|``. The result
    is an upper bound on the true infimum.
    """
    parts = tuple(parts)
    v = _values(g)
    if v.shape != (nu.size, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({nu.size}, {grid.size})")
    scale = float(np.abs(v).max()) if v.size else 0.0
    if scale == 0.0:
        return 0.0
    k = len(parts)
    free = (k - 1) * v.size
    if free > max_dim:
        raise DimensionTooLargeError(f"{free} free reals exceeds the lattice cap {max_dim}")
    full = [float(_batch_value(P, v[None], nu, grid)[0]) for P in parts]
    best_val = min(full)
    if k == 1:
        return best_val
    unit = np.eye(v.size).reshape(v.size, *v.shape)
    half = []
    for P in parts[:-1]:
        e_norms = _batch_value(P, unit, nu, grid)
        with np.errstate(divide="ignore"):
            half.append(np.where(e_norms > 0, best_val / e_norms, 0.0))
    half = np.concatenate(half)
    center = np.zeros(free)
    cheapest = int(np.argmin(full))
    if cheapest < k - 1:
        center[cheapest * v.size:(cheapest + 1) * v.size] = v.ravel()
    step = np.where(half > 0, 2 * half / (points - 1), 0.0)
    lo_box, hi_box = -half, half
    offsets = np.arange(points) - (points - 1) / 2
    first = True
    while True:
        axes = [np.array([0.0]) if s == 0 else (0.0 if first else c) + offsets * s for c, s in zip(center, step)]
        cand = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, free)
        if first:
            cand = np.vstack([cand, center])
        cand = np.clip(cand, lo_box, hi_box) if not first else cand
        splits = cand.reshape(-1, k - 1, *v.shape)
        rest = v[None] - splits.sum(axis=1)
        total = _batch_value(parts[-1], rest, nu, grid)
        for i, P in enumerate(parts[:-1]):
            total = total + _batch_value(P, splits[:, i], nu, grid)
        i_best = int(np.argmin(total))
        if total[i_best] <= best_val:
            best_val = float(total[i_best])
            center = cand[i_best]
        first = False
        if np.all(step <= resolution * scale):
            return best_val
        step = step * 2 * window / (points - 1)


def dense_grid_sup(g, pattern, model, q, grid, n_grid=10_000):
    """``max |M_t|_q`` over a uniform time grid plus every event time, where
    both the value and the left limit are evaluated at event times.

    ``M_t`` is computed afresh at each time from its definition (atoms up to
    ``t`` minus the compensator), without reusing any running state.
    """
    v = _values(g)
    horizon = model.horizon
    if isinstance(model, PoissonModel):
        atom_t, atom_c = pattern.times, pattern.cells
        start, end = model.cell_bounds()
        rate = model.rates.ravel()

        def comp(s, strict):
            return (rate * (np.clip(s[:, None], start, end) - start)) @ v

        event_t = np.concatenate([atom_t, model.time_edges])
    else:
        fired = np.flatnonzero(pattern.outcomes)
        atom_t, atom_c = model.times[fired], fired

        def comp(s, strict):
            mask = model.times[None, :] < s[:, None] if strict else model.times[None, :] <= s[:, None]
            return (mask * model.probs) @ v

        event_t = model.times
    times = np.union1d(np.linspace(0.0, horizon, n_grid), event_t)
    jumps = v[atom_c]
    upto = (atom_t[None, :] <= times[:, None]).astype(float)
    before = (atom_t[None, :] < times[:, None]).astype(float)
    right = upto @ jumps - comp(times, False)
    left = before @ jumps - comp(times, True)
    both = np.concatenate([weighted_lq(right, q, grid.weights, axis=1), weighted_lq(left, q, grid.weights, axis=1)])
    return float(both.max(initial=0.0))
