"""Weighted L_q norms on a discretized space, mixed norms over the compensator,
and the three atomic predictable norms.

Layout convention: an integrand is a real array of shape ``(n_cells, n_points)``
where row ``c`` is the field ``g(c, .)`` over the space grid and ``nu.weights[c]``
is the compensator mass of cell ``c``. Integrands are deterministic, so every
expectation in the predictable norms is trivial and the norms are exact sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidExponentError, InvalidInputError

__all__ = [
    "SpaceGrid",
    "NuGrid",
    "Integrand",
    "ATOMIC_NORMS",
    "lq_norm",
    "weighted_lq",
    "mixed_norm",
    "tilde_norm",
    "atomic_norm",
    "mixed_norm_2d",
]

ATOMIC_NORMS = ("Lppq", "Lpqq", "Tilde")


def _as_weights(weights, *, allow_zero, name):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError(f"{name} must be finite")
    if allow_zero:
        if np.any(w < 0):
            raise InvalidInputError(f"{name} must be nonnegative")
    elif np.any(w <= 0):
        raise InvalidInputError(f"{name} must be strictly positive")
    w = w.copy()
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class SpaceGrid:
    """Finite measure space ``(X, n)``: labelled points with positive weights."""

    weights: np.ndarray
    points: tuple = field(default=())

    def __post_init__(self):
        w = _as_weights(self.weights, allow_zero=False, name="space weights")
        if w.size == 0:
            raise InvalidInputError("space grid needs at least one point")
        object.__setattr__(self, "weights", w)
        pts = tuple(self.points) if self.points else tuple(range(w.size))
        if len(pts) != w.size:
            raise DimensionError("points and weights differ in length")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, n_points, weight=1.0):
        return cls(np.full(n_points, float(weight)))

    @property
    def size(self):
        return self.weights.size

    def to_dict(self):
        return {"points": list(self.points), "weights": self.weights.tolist()}


@dataclass(frozen=True)
class NuGrid:
    """The compensator as a discrete measure on (time-cell, mark) cells."""

    weights: np.ndarray
    cells: tuple = field(default=())

    def __post_init__(self):
        w = _as_weights(self.weights, allow_zero=True, name="nu weights")
        object.__setattr__(self, "weights", w)
        cells = tuple(tuple(c) for c in self.cells) if self.cells else tuple((i, 0) for i in range(w.size))
        if len(cells) != w.size:
            raise DimensionError("cells and nu weights differ in length")
        object.__setattr__(self, "cells", cells)

    @property
    def size(self):
        return self.weights.size

    @property
    def total_mass(self):
        return float(self.weights.sum())


@dataclass(frozen=True)
class Integrand:
    """Deterministic predictable field ``g`` of shape ``(n_cells, n_points)``."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionError("integrand must be indexed by (cell, point)")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("integrand entries must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def scaled(self, c):
        return Integrand(c * self.values, self.label)

    def check(self, nu, grid):
        if self.values.shape != (nu.size, grid.size):
            raise DimensionError(
                f"integrand shape {self.values.shape} does not match "
                f"(cells={nu.size}, points={grid.size})"
            )


def _values(g):
    return g.values if isinstance(g, Integrand) else np.asarray(g, dtype=float)


def _check_exponent(q, *, lo=1.0, open_lo=False, name="q"):
    q = float(q)
    if not np.isfinite(q) or q < lo or (open_lo and q == lo):
        bound = f"({lo:g}, inf)" if open_lo else f"[{lo:g}, inf)"
        raise InvalidExponentError(f"exponent {name}={q!r} must lie in {bound}")
    return q


def weighted_lq(values, q, weights, axis=-1):
    """``(sum |v|^q w)^(1/q)`` along ``axis``; ``q=inf`` gives the max over
    entries with positive weight. Scaled by the max modulus to avoid overflow."""
    v = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    v = np.moveaxis(v, axis, -1)
    if np.isinf(q):
        masked = np.where(w > 0, v, 0.0)
        return masked.max(axis=-1) if masked.shape[-1] else np.zeros(masked.shape[:-1])
    scale = v.max(axis=-1, keepdims=True) if v.shape[-1] else np.zeros(v.shape[:-1] + (1,))
    safe = np.where(scale > 0, scale, 1.0)
    s = np.sum((v / safe) ** q * w, axis=-1)
    return scale[..., 0] * s ** (1.0 / q)


def lq_norm(v, q, grid):
    """L_q(X) norm of a vector over the space grid."""
    q = _check_exponent(q)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("vector entries must be finite")
    if v.shape != (grid.size,):
        raise DimensionError(f"vector of shape {v.shape} on a grid of {grid.size} points")
    return float(weighted_lq(v, q, grid.weights))


def mixed_norm(g, outer, inner, nu, grid):
    """``L_outer(nu) L_inner(X)``: inner norm over space per cell, then the
    nu-weighted outer norm over cells. Exponents in ``[1, inf]``."""
    v = _values(g)
    if v.shape != (nu.size, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({nu.size}, {grid.size})")
    slices = weighted_lq(v, inner, grid.weights, axis=1)
    return float(weighted_lq(slices, outer, nu.weights))


def tilde_norm(g, q, nu, grid):
    """``L_q(X) L_2(nu)``: pointwise square function over cells, then L_q in space."""
    v = _values(g)
    if v.shape != (nu.size, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({nu.size}, {grid.size})")
    square = weighted_lq(v, 2.0, nu.weights, axis=0)
    return float(weighted_lq(square, q, grid.weights))


def atomic_norm(g, which, p, q, nu, grid):
    """One of the three atomic predictable norms.

    Parameters
    ----------
    g : Integrand or array of shape (n_cells, n_points)
    which : {"Lppq", "Lpqq", "Tilde"}
    p, q : float
        Exponents in ``(1, inf)``.
    nu : NuGrid
    grid : SpaceGrid

    Returns
    -------
    float
        ``Lppq = (sum_c |g_c|_q^p nu_c)^(1/p)``, ``Lpqq = (sum_c |g_c|_q^q nu_c)^(1/q)``,
        ``Tilde = |(sum_c g_c^2 nu_c)^(1/2)|_q``.
    """
    p = _check_exponent(p, open_lo=True, name="p")
    q = _check_exponent(q, open_lo=True, name="q")
    if which == "Lppq":
        return mixed_norm(g, p, q, nu, grid)
    if which == "Lpqq":
        return mixed_norm(g, q, q, nu, grid)
    if which == "Tilde":
        return tilde_norm(g, q, nu, grid)
    raise InvalidInputError(f"unknown atomic norm {which!r}; expected one of {ATOMIC_NORMS}")


def mixed_norm_2d(f, outer, inner, outer_weights, inner_weights):
    """Mixed norm of a 2-D field ``f[i, j]``: inner exponent over ``j``, outer over ``i``."""
    inner_vals = weighted_lq(f, inner, inner_weights, axis=1)
    return float(weighted_lq(inner_vals, outer, outer_weights))


def as_integrand(g: Integrand | Sequence | np.ndarray) -> Integrand:
    return g if isinstance(g, Integrand) else Integrand(np.asarray(g, dtype=float))
