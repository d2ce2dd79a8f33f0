"""The two concrete random-measure models, their sampling, and integration of
deterministic fields against the compensator.

Every replica draws from its own Philox stream keyed by ``(seed, replica)``, so a
replica's pattern does not depend on how replicas are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError, InvalidModelError
from .norms import NuGrid

__all__ = [
    "PoissonModel",
    "BernoulliCellsModel",
    "PointPattern",
    "PatternBatch",
    "replica_stream",
    "sample",
    "sample_batch",
    "compensator_cumulative",
]

_MASK64 = (1 << 64) - 1


def _key(seed, replica):
    seed, replica = int(seed), int(replica)
    if seed < 0 or replica < 0:
        raise InvalidInputError("seed and replica index must be nonnegative")
    return np.array([replica & _MASK64, seed & _MASK64], dtype=np.uint64)


def replica_stream(seed, replica):
    """Counter-based generator for one replica: Philox keyed by (seed, replica)."""
    bitgen = np.random.Philox(key=0)
    _rekey(bitgen, _key(seed, replica))
    return np.random.Generator(bitgen)


def _rekey(bitgen, key):
    # same stream as Philox(key=seed << 64 | replica), without re-constructing
    bitgen.state = {
        "bit_generator": "Philox",
        "state": {"counter": np.zeros(4, dtype=np.uint64), "key": key},
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PoissonModel:
    """Marked Poisson random measure with piecewise-constant intensity.

    ``rates[k, m]`` is the intensity of mark ``m`` on the time cell
    ``[time_edges[k], time_edges[k+1])``. Cell ``c = k * n_marks + m``.
    """

    time_edges: np.ndarray
    rates: np.ndarray
    marks: tuple = field(default=())

    variant = "Poisson"

    def __post_init__(self):
        edges = _frozen(self.time_edges)
        rates = np.array(self.rates, dtype=float)
        if rates.ndim == 1:
            rates = rates[:, None]
        if edges.ndim != 1 or edges.size < 2:
            raise InvalidModelError("time_edges needs at least two entries")
        if edges[0] != 0.0 or not np.all(np.diff(edges) > 0) or not np.isfinite(edges[-1]):
            raise InvalidModelError("time_edges must start at 0 and increase strictly to a finite horizon")
        if rates.shape[0] != edges.size - 1:
            raise InvalidModelError("rates must have one row per time cell")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise InvalidModelError("rates must be finite and nonnegative")
        rates.flags.writeable = False
        object.__setattr__(self, "time_edges", edges)
        object.__setattr__(self, "rates", rates)
        marks = tuple(self.marks) if self.marks else tuple(range(rates.shape[1]))
        if len(marks) != rates.shape[1]:
            raise InvalidModelError("one mark label per rates column required")
        object.__setattr__(self, "marks", marks)

    @classmethod
    def homogeneous(cls, rate, horizon, n_time_cells=1, n_marks=1):
        edges = np.linspace(0.0, horizon, n_time_cells + 1)
        return cls(edges, np.full((n_time_cells, n_marks), float(rate)))

    @property
    def horizon(self):
        return float(self.time_edges[-1])

    @property
    def n_marks(self):
        return self.rates.shape[1]

    @property
    def n_cells(self):
        return self.rates.size

    def cell_bounds(self):
        """Start and end time of every cell, shape ``(n_cells,)`` each."""
        return self._bounds

    @cached_property
    def _bounds(self):
        k = np.repeat(np.arange(self.rates.shape[0]), self.n_marks)
        return self.time_edges[k], self.time_edges[k + 1]

    def nu_grid(self):
        return self._nu

    @cached_property
    def _nu(self):
        dt = np.diff(self.time_edges)
        cells = [(k, m) for k in range(self.rates.shape[0]) for m in range(self.n_marks)]
        return NuGrid((self.rates * dt[:, None]).ravel(), cells)

    def breakpoints(self):
        """Times where the compensator's slope may change (interior edges and T)."""
        return self.time_edges[1:]

    def to_dict(self):
        return {
            "variant": self.variant,
            "time_edges": self.time_edges.tolist(),
            "rates": self.rates.tolist(),
        }


@dataclass(frozen=True)
class BernoulliCellsModel:
    """Independent cells: cell ``c`` fires at time ``times[c]`` with probability
    ``probs[c]``. The compensator puts mass ``probs[c]`` at ``times[c]``."""

    times: np.ndarray
    probs: np.ndarray
    horizon: float
    marks: np.ndarray = field(default=None)

    variant = "BernoulliCells"

    def __post_init__(self):
        times = _frozen(self.times)
        probs = _frozen(self.probs)
        horizon = float(self.horizon)
        if times.ndim != 1 or times.shape != probs.shape:
            raise InvalidModelError("times and probs must be 1-D of equal length")
        if not (np.isfinite(horizon) and horizon > 0):
            raise InvalidModelError("horizon must be positive and finite")
        if np.any(times <= 0) or np.any(times > horizon):
            raise InvalidModelError("cell times must lie in (0, T]")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
            raise InvalidModelError("cell probabilities must lie in [0, 1]")
        marks = np.zeros(times.size, dtype=int) if self.marks is None else np.array(self.marks, dtype=int)
        if marks.shape != times.shape:
            raise InvalidModelError("one mark per cell required")
        marks.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "marks", marks)

    @property
    def n_cells(self):
        return self.times.size

    def nu_grid(self):
        return self._nu

    @cached_property
    def _nu(self):
        return NuGrid(self.probs, [(c, int(m)) for c, m in enumerate(self.marks)])

    def to_dict(self):
        return {
            "variant": self.variant,
            "times": self.times.tolist(),
            "probs": self.probs.tolist(),
            "horizon": self.horizon,
            "marks": self.marks.tolist(),
        }


@dataclass(frozen=True)
class PointPattern:
    """One sample of the random measure.

    ``times`` and ``cells`` list the atoms in time order. For Bernoulli models
    ``outcomes`` holds the full indicator vector (one entry per cell).
    """

    times: np.ndarray
    cells: np.ndarray
    outcomes: np.ndarray | None = None

    @property
    def size(self):
        return self.times.size


def _strictly_increasing(times):
    # ties have probability zero but can occur in floating point
    t = times.copy()
    for i in range(1, t.size):
        if t[i] <= t[i - 1]:
            t[i] = np.nextafter(t[i - 1], np.inf)
    return t


def _sample_poisson(model, rng):
    nu = model.nu_grid().weights
    counts = rng.poisson(nu)
    cells = np.repeat(np.arange(nu.size), counts)
    start, end = model.cell_bounds()
    u = rng.random(cells.size)
    times = start[cells] + (end[cells] - start[cells]) * u
    order = np.lexsort((cells, times))
    times, cells = times[order], cells[order]
    if times.size > 1 and np.any(np.diff(times) <= 0):
        times = _strictly_increasing(times)
    return PointPattern(times, cells)


def _sample_bernoulli(model, rng):
    xi = (rng.random(model.n_cells) < model.probs).astype(np.int8)
    fired = np.flatnonzero(xi)
    order = fired[np.argsort(model.times[fired], kind="stable")]
    return PointPattern(model.times[order], order, xi)


def sample(model, rng):
    """Draw one point pattern from ``model`` using generator ``rng``."""
    if isinstance(model, PoissonModel):
        return _sample_poisson(model, rng)
    if isinstance(model, BernoulliCellsModel):
        return _sample_bernoulli(model, rng)
    raise InvalidModelError(f"unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class PatternBatch:
    """Patterns for replicas ``0 .. replicas-1`` in flattened form.

    Poisson: atoms of replica ``r`` are ``offsets[r]:offsets[r+1]`` of
    ``times``/``cells``. Bernoulli: ``outcomes`` has shape ``(replicas, n_cells)``.
    """

    model: object
    seed: int
    replicas: int
    times: np.ndarray
    cells: np.ndarray
    offsets: np.ndarray
    outcomes: np.ndarray | None = None

    def pattern(self, r):
        lo, hi = self.offsets[r], self.offsets[r + 1]
        xi = None if self.outcomes is None else self.outcomes[r]
        return PointPattern(self.times[lo:hi], self.cells[lo:hi], xi)


def _sample_range(model, seed, lo, hi):
    bitgen = np.random.Philox(key=0)
    rng = np.random.Generator(bitgen)
    out = []
    for r in range(lo, hi):
        _rekey(bitgen, _key(seed, r))
        out.append(sample(model, rng))
    return out


def sample_batch(model, seed, replicas, workers=1):
    """Sample ``replicas`` independent patterns; the result does not depend on
    ``workers``."""
    replicas = int(replicas)
    if replicas < 1:
        raise InvalidInputError("replicas must be positive")
    workers = max(1, int(workers))
    bounds = np.linspace(0, replicas, min(workers, replicas) + 1).astype(int)
    if workers == 1:
        patterns = _sample_range(model, seed, 0, replicas)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(lambda ab: _sample_range(model, seed, *ab), zip(bounds[:-1], bounds[1:]))
            patterns = [p for chunk in chunks for p in chunk]
    sizes = np.array([p.size for p in patterns], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    times = np.concatenate([p.times for p in patterns]) if offsets[-1] else np.zeros(0)
    cells = np.concatenate([p.cells for p in patterns]).astype(np.int64) if offsets[-1] else np.zeros(0, np.int64)
    outcomes = None
    if isinstance(model, BernoulliCellsModel):
        outcomes = np.stack([p.outcomes for p in patterns])
    return PatternBatch(model, int(seed), replicas, times, cells, offsets, outcomes)


def compensator_cumulative(values, model, t):
    """``int_0^t int_Z values dnu`` for a field over the model's cells.

    ``values`` may be 1-D (scalar field, returns float) or 2-D with one row per
    cell (returns a vector over the trailing axis).
    """
    t = float(t)
    horizon = model.horizon
    if not (0.0 <= t <= horizon):
        raise InvalidInputError(f"t={t} outside [0, {horizon}]")
    v = np.asarray(values, dtype=float)
    if v.shape[0] != model.n_cells:
        raise InvalidInputError(f"field has {v.shape[0]} cells, model has {model.n_cells}")
    if isinstance(model, PoissonModel):
        start, end = model.cell_bounds()
        rate = model.rates.ravel()
        elapsed = np.clip(t, start, end) - start
        w = rate * elapsed
    else:
        w = np.where(model.times <= t, model.probs, 0.0)
    out = np.tensordot(w, v, axes=(0, 0))
    return float(out) if v.ndim == 1 else out
