"""Pathwise evaluation of ``M = g * (mu - nu)``: states, running maximum in L_q,
brackets, and the Davis split of the jumps.

Between events the path is affine in time (the compensator is piecewise
linear for Poisson models and piecewise constant for Bernoulli cells). The
norm of an affine path is convex in t, so the supremum over each segment is
attained at an endpoint: the value right after an event or the left limit at
the next one. Those are the only states ever evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .norms import Integrand, SpaceGrid, weighted_lq
from .random_measure import BernoulliCellsModel, PatternBatch, PoissonModel, compensator_cumulative

__all__ = [
    "PathRealization",
    "DavisSplit",
    "PathStats",
    "integrate_path",
    "sup_lq",
    "davis_split",
    "path_statistics",
]


@dataclass(frozen=True)
class PathRealization:
    """One realized path.

    ``eval_times[i]`` carries the left limit ``left[i]`` and the value
    ``right[i]`` of ``M`` there. ``jumps[j]`` is ``Delta M`` at ``jump_times[j]``.
    """

    eval_times: np.ndarray
    left: np.ndarray
    right: np.ndarray
    jump_times: np.ndarray
    jumps: np.ndarray
    terminal: np.ndarray
    qv: np.ndarray
    pb: np.ndarray

    @property
    def states(self):
        return self.right


def _values(g):
    return g.values if isinstance(g, Integrand) else np.asarray(g, dtype=float)


def _check_g(v, model):
    if v.ndim != 2 or v.shape[0] != model.n_cells:
        raise DimensionError(f"integrand shape {v.shape} does not cover the model's {model.n_cells} cells")


def integrate_path(g, pattern, model):
    """Compensated integral along one sampled pattern.

    Parameters
    ----------
    g : Integrand or array (n_cells, n_points)
    pattern : PointPattern
    model : PoissonModel or BernoulliCellsModel

    Returns
    -------
    PathRealization
    """
    v = _values(g)
    _check_g(v, model)
    nu = model.nu_grid().weights
    pb = (v**2 * nu[:, None]).sum(axis=0)
    if pattern.cells.size and (pattern.cells.min() < 0 or pattern.cells.max() >= model.n_cells):
        raise DimensionError("pattern atom outside the model's cells")

    if isinstance(model, PoissonModel):
        jump_times = pattern.times
        jumps = v[pattern.cells]
        grid_t = np.concatenate([model.time_edges, jump_times])
        is_atom = np.concatenate([np.zeros(model.time_edges.size, bool), np.ones(jump_times.size, bool)])
        order = np.lexsort((is_atom, grid_t))
        eval_times = grid_t[order]
        atom_jump = np.zeros((grid_t.size, v.shape[1]))
        atom_jump[model.time_edges.size:] = jumps
        atom_jump = atom_jump[order]
        comp = np.stack([compensator_cumulative(v, model, t) for t in eval_times])
        right = np.cumsum(atom_jump, axis=0) - comp
        left = right - atom_jump
    elif isinstance(model, BernoulliCellsModel):
        xi = pattern.outcomes
        if xi is None or xi.shape != (model.n_cells,):
            raise DimensionError("Bernoulli pattern must carry one outcome per cell")
        cell_jumps = (xi - model.probs)[:, None] * v
        eval_times, group = np.unique(model.times, return_inverse=True)
        jumps = np.zeros((eval_times.size, v.shape[1]))
        np.add.at(jumps, group, cell_jumps)
        jump_times = eval_times
        right = np.cumsum(jumps, axis=0)
        left = right - jumps
        eval_times = np.append(eval_times, model.horizon)
        last = right[-1:] if right.size else np.zeros((1, v.shape[1]))
        right = np.vstack([right, last])
        left = np.vstack([left, last])
    else:
        raise DimensionError(f"unsupported model type {type(model).__name__}")

    terminal = right[-1].copy()
    qv = (jumps**2).sum(axis=0)
    return PathRealization(eval_times, left, right, np.asarray(jump_times), jumps, terminal, qv, pb)


def sup_lq(path, q, grid):
    """``sup_{t <= T} |M_t|_{L_q}``, evaluated at segment endpoints."""
    if path.right.shape[1] != grid.size:
        raise DimensionError("path and grid disagree on the number of points")
    norms = np.concatenate([
        weighted_lq(path.left, q, grid.weights, axis=1),
        weighted_lq(path.right, q, grid.weights, axis=1),
        [0.0],
    ])
    return float(norms.max())


@dataclass(frozen=True)
class DavisSplit:
    """Big-jump indices (0-based), the pre-jump running sups ``S_{s-}``, and ``S_inf``."""

    big_indices: np.ndarray
    prior_sup: np.ndarray
    jump_norms: np.ndarray
    s_inf: float

    @property
    def thresholds(self):
        return 2.0 * self.prior_sup

    @property
    def big_total_variation(self):
        return float(self.jump_norms[self.big_indices].sum())


def davis_split(jumps, q, grid):
    """Split time-ordered jumps into the Davis big-jump part.

    A jump is big when its L_q norm exceeds twice the largest earlier jump
    norm. The big jumps then at least double each time, so their total
    variation is at most ``2 * S_inf``.
    """
    jumps = np.asarray(jumps, dtype=float)
    if jumps.size == 0:
        empty = np.zeros(0)
        return DavisSplit(np.zeros(0, dtype=int), empty, empty, 0.0)
    if jumps.ndim == 1:
        jumps = jumps[:, None]
    norms = weighted_lq(jumps, q, grid.weights, axis=1)
    running = np.maximum.accumulate(norms)
    prior = np.concatenate([[0.0], running[:-1]])
    big = np.flatnonzero(norms > 2.0 * prior)
    return DavisSplit(big, prior, norms, float(running[-1]))


@dataclass(frozen=True)
class PathStats:
    """Per-replica summaries of a batch of paths, keyed by the exponent q.

    ``sup[q]``, ``terminal_norm[q]`` and ``bracket_norm[q]`` are arrays of
    length ``replicas`` holding ``sup_t |M_t|_q``, ``|M_T|_q`` and
    ``|[M,M]_T^(1/2)|_q``.
    """

    sup: dict
    terminal_norm: dict
    bracket_norm: dict
    terminal: np.ndarray
    qv: np.ndarray
    pb: np.ndarray

    @property
    def replicas(self):
        return self.terminal.shape[0]


def _poisson_chunk(v, model, batch, lo, hi, qs, w):
    edges = model.time_edges
    n_edges = edges.size
    start, end = model.cell_bounds()
    rate = model.rates.ravel()
    counts = np.diff(batch.offsets[lo:hi + 1])
    n_rep = hi - lo
    width = int(counts.max(initial=0)) + n_edges
    t = np.full((n_rep, width), np.inf)
    jump = np.zeros((n_rep, width, v.shape[1]))
    t[:, :n_edges] = edges
    a0, a1 = batch.offsets[lo], batch.offsets[hi]
    rep = np.repeat(np.arange(n_rep), counts)
    pos = n_edges + np.arange(a1 - a0) - (batch.offsets[lo:hi] - a0)[rep]
    t[rep, pos] = batch.times[a0:a1]
    jump[rep, pos] = v[batch.cells[a0:a1]]
    order = np.argsort(t, axis=1, kind="stable")
    t = np.take_along_axis(t, order, axis=1)
    jump = np.take_along_axis(jump, order[:, :, None], axis=1)
    valid = np.isfinite(t)
    tc = np.where(valid, t, model.horizon)
    elapsed = np.clip(tc[:, :, None], start, end) - start
    comp = (elapsed * rate) @ v
    right = np.cumsum(jump, axis=1) - comp
    left = right - jump
    terminal = right[np.arange(n_rep), valid.sum(axis=1) - 1]
    qv = np.einsum("rex,rex->rx", jump, jump)
    out = {}
    for q in qs:
        nl = np.where(valid, weighted_lq(left, q, w), 0.0)
        nr = np.where(valid, weighted_lq(right, q, w), 0.0)
        out[q] = np.maximum(nl.max(axis=1), nr.max(axis=1))
    return out, terminal, qv


def _bernoulli_chunk(v, model, batch, lo, hi, qs, w):
    xi = batch.outcomes[lo:hi].astype(float)
    times, group = np.unique(model.times, return_inverse=True)
    cell_jumps = (xi - model.probs)[:, :, None] * v[None]
    jumps = np.zeros((hi - lo, times.size, v.shape[1]))
    for k in range(times.size):
        jumps[:, k] = cell_jumps[:, group == k].sum(axis=1)
    states = np.cumsum(jumps, axis=1)
    terminal = states[:, -1] if times.size else np.zeros((hi - lo, v.shape[1]))
    qv = (jumps**2).sum(axis=1)
    out = {q: weighted_lq(states, q, w).max(axis=1, initial=0.0) for q in qs}
    return out, terminal, qv


def path_statistics(g, batch: PatternBatch, qs, grid: SpaceGrid, chunk=4096):
    """Evaluate ``g`` along every pattern of ``batch`` and summarize per replica.

    Chunks are processed in replica order and every replica's numbers depend
    only on its own pattern, so the output does not depend on ``chunk``.
    """
    model = batch.model
    v = _values(g)
    _check_g(v, model)
    if v.shape[1] != grid.size:
        raise DimensionError("integrand and grid disagree on the number of points")
    qs = tuple(float(q) for q in qs)
    w = grid.weights
    nu = model.nu_grid().weights
    pb = (v**2 * nu[:, None]).sum(axis=0)
    kernel = _poisson_chunk if isinstance(model, PoissonModel) else _bernoulli_chunk
    sups = {q: [] for q in qs}
    terms, qvs = [], []
    for lo in range(0, batch.replicas, chunk):
        hi = min(lo + chunk, batch.replicas)
        out, terminal, qv = kernel(v, model, batch, lo, hi, qs, w)
        for q in qs:
            sups[q].append(out[q])
        terms.append(terminal)
        qvs.append(qv)
    terminal = np.concatenate(terms)
    qv = np.concatenate(qvs)
    sup = {q: np.concatenate(sups[q]) for q in qs}
    terminal_norm = {q: weighted_lq(terminal, q, w) for q in qs}
    bracket_norm = {q: weighted_lq(np.sqrt(qv), q, w) for q in qs}
    return PathStats(sup, terminal_norm, bracket_norm, terminal, qv, pb)
