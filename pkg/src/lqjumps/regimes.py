"""Norm expressions built from the atomic predictable norms, the six-case
regime formula, and evaluation of sum-space norms by convex optimization.

Intersections are normed by the max of their components. A sum node is an
infimal convolution: ``inf { sum_i N_i(h_i) : sum_i h_i = g }``. Whole
expression trees (sums nested in intersections and vice versa) are compiled
into a single conic program with ``g`` as a parameter, solved with Clarabel,
and the returned value is re-evaluated exactly on the solver's decomposition,
so it is always a genuine upper bound. The dual variable of ``u == g`` yields
a lower bound through explicit dual-norm bounds.
"""

from __future__ import annotations

import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import cvxpy as cp
import numpy as np
from scipy import optimize

from .errors import ConvergenceError, DimensionError, DimensionTooLargeError, InvalidExponentError
from .norms import Integrand, NuGrid, SpaceGrid, weighted_lq

__all__ = [
    "NormExpr",
    "MixedNorm",
    "SquareFunctionNorm",
    "Scaled",
    "Sum",
    "Intersect",
    "atom",
    "RegimeFormula",
    "NormCertificate",
    "regime_select",
    "evaluate_norm",
    "certify_norm",
    "sum_norm",
    "ipq_norm",
    "dual_norm_bruteforce",
    "conjugate",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


def conjugate(p):
    p = float(p)
    if p == 1.0:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


class NormExpr:
    """A norm functional on integrands over ``(nu, grid)``."""

    def value(self, h, nu, grid):
        """Exact value for sum-free expressions."""
        raise NotImplementedError

    def dual_bound(self, phi, nu, grid):
        """Upper bound on the dual norm of ``phi`` under the pairing
        ``sum_c sum_x phi g nu_c n_x``."""
        raise NotImplementedError

    @property
    def has_sum(self):
        return False


def _check_exp(e, name):
    e = float(e)
    if not (e >= 1.0):
        raise InvalidExponentError(f"{name}={e!r} must be >= 1")
    return e


@dataclass(frozen=True)
class MixedNorm(NormExpr):
    """``L_outer(nu) L_inner(X)``."""

    outer: float
    inner: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "outer", _check_exp(self.outer, "outer"))
        object.__setattr__(self, "inner", _check_exp(self.inner, "inner"))

    def value(self, h, nu, grid):
        slices = weighted_lq(h, self.inner, grid.weights, axis=1)
        return float(weighted_lq(slices, self.outer, nu.weights))

    def dual_bound(self, phi, nu, grid):
        slices = weighted_lq(phi, conjugate(self.inner), grid.weights, axis=1)
        return float(weighted_lq(slices, conjugate(self.outer), nu.weights))

    def cvx(self, h, nu_w, n_w):
        s, r = self.inner, self.outer
        if np.isinf(s):
            slices = cp.max(cp.abs(h), axis=1)
        else:
            weighted = cp.multiply(h, n_w[None, :] ** (1.0 / s))
            slices = cp.hstack([cp.pnorm(weighted[c, :], s) for c in range(nu_w.size)])
        if np.isinf(r):
            return cp.max(slices)
        return cp.norm(cp.multiply(nu_w ** (1.0 / r), slices), r)

    def __str__(self):
        return self.name or f"L({self.outer:g},{self.inner:g})"


@dataclass(frozen=True)
class SquareFunctionNorm(NormExpr):
    """``L_q(X) L_2(nu)``: the pointwise square function, normed in space."""

    q: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "q", _check_exp(self.q, "q"))

    def value(self, h, nu, grid):
        square = weighted_lq(h, 2.0, nu.weights, axis=0)
        return float(weighted_lq(square, self.q, grid.weights))

    def dual_bound(self, phi, nu, grid):
        square = weighted_lq(phi, 2.0, nu.weights, axis=0)
        return float(weighted_lq(square, conjugate(self.q), grid.weights))

    def cvx(self, h, nu_w, n_w):
        weighted = cp.multiply(h, np.sqrt(nu_w)[:, None])
        square = cp.hstack([cp.norm(weighted[:, x], 2) for x in range(n_w.size)])
        if np.isinf(self.q):
            return cp.max(square)
        return cp.norm(cp.multiply(n_w ** (1.0 / self.q), square), self.q)

    def __str__(self):
        return self.name or f"Tilde({self.q:g})"


@dataclass(frozen=True)
class Scaled(NormExpr):
    factor: float
    child: NormExpr

    def __post_init__(self):
        if not (float(self.factor) > 0):
            raise ValueError("scale factor must be positive")

    def value(self, h, nu, grid):
        return self.factor * self.child.value(h, nu, grid)

    def dual_bound(self, phi, nu, grid):
        return self.child.dual_bound(phi, nu, grid) / self.factor

    @property
    def has_sum(self):
        return self.child.has_sum

    def __str__(self):
        return f"{self.factor:g}*{self.child}"


@dataclass(frozen=True)
class Intersect(NormExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("Intersect needs at least one child")

    def value(self, h, nu, grid):
        return max(c.value(h, nu, grid) for c in self.children)

    def dual_bound(self, phi, nu, grid):
        # the exact dual is the infimal convolution of the duals
        return min(c.dual_bound(phi, nu, grid) for c in self.children)

    @property
    def has_sum(self):
        return any(c.has_sum for c in self.children)

    def __str__(self):
        return "Intersect(" + ", ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Sum(NormExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("Sum needs at least one child")

    def value(self, h, nu, grid):
        raise TypeError("sum-space norms need the optimizer; use evaluate_norm")

    def dual_bound(self, phi, nu, grid):
        return max(c.dual_bound(phi, nu, grid) for c in self.children)

    @property
    def has_sum(self):
        return True

    def __str__(self):
        return "Sum(" + ", ".join(map(str, self.children)) + ")"


def atom(which, p, q):
    """Atomic norm as an expression: ``Lppq``, ``Lpqq`` or ``Tilde``."""
    if which == "Lppq":
        return MixedNorm(p, q, "Lppq")
    if which == "Lpqq":
        return MixedNorm(q, q, "Lpqq")
    if which == "Tilde":
        return SquareFunctionNorm(q, "Tilde")
    raise ValueError(f"unknown atomic norm {which!r}")


@dataclass(frozen=True)
class RegimeFormula:
    case: int
    p: float
    q: float
    expr: NormExpr

    @property
    def shape(self):
        return str(self.expr)


_CASES = {
    1: lambda a: Sum((a["Lppq"], a["Lpqq"], a["Tilde"])),
    2: lambda a: Sum((Intersect((a["Lppq"], a["Lpqq"])), a["Tilde"])),
    3: lambda a: Intersect((a["Lppq"], Sum((a["Lpqq"], a["Tilde"])))),
    4: lambda a: Sum((a["Lppq"], Intersect((a["Lpqq"], a["Tilde"])))),
    5: lambda a: Intersect((Sum((a["Lppq"], a["Lpqq"])), a["Tilde"])),
    6: lambda a: Intersect((a["Lppq"], a["Lpqq"], a["Tilde"])),
}


def regime_select(p, q):
    """First case, in the listed order, whose condition holds for ``(p, q)``."""
    p, q = float(p), float(q)
    for name, e in (("p", p), ("q", q)):
        if not (1.0 < e < np.inf):
            raise InvalidExponentError(f"exponent {name}={e!r} must lie in (1, inf)")
    conditions = (
        p <= q <= 2,
        q <= p <= 2,
        q < 2 <= p,
        p < 2 <= q,
        2 <= p <= q,
        2 <= q <= p,
    )
    case = 1 + conditions.index(True)
    atoms = {w: atom(w, p, q) for w in ("Lppq", "Lpqq", "Tilde")}
    return RegimeFormula(case, p, q, _CASES[case](atoms))


class _Compiled:
    """One conic program per (expression, active weights, shape); ``g`` is a parameter."""

    def __init__(self, expr, nu_w, n_w):
        shape = (nu_w.size, n_w.size)
        self.expr = expr
        self.lock = threading.Lock()
        self.splits = []
        self.g = cp.Parameter(shape)
        self.u = cp.Variable(shape)
        self.eq = self.u == self.g
        objective = self._build(expr, self.u, nu_w, n_w, shape)
        self.problem = cp.Problem(cp.Minimize(objective), [self.eq])

    def _build(self, node, h, nu_w, n_w, shape):
        if isinstance(node, Sum):
            parts = [cp.Variable(shape) for _ in node.children[:-1]]
            self.splits.append(parts)
            pieces = parts + [h - sum(parts)] if parts else [h]
            return sum(self._build(c, x, nu_w, n_w, shape) for c, x in zip(node.children, pieces))
        if isinstance(node, Intersect):
            return cp.max(cp.hstack([self._build(c, h, nu_w, n_w, shape) for c in node.children]))
        if isinstance(node, Scaled):
            return node.factor * self._build(node.child, h, nu_w, n_w, shape)
        return node.cvx(h, nu_w, n_w)


def _replay(node, h, splits, nu, grid):
    """Exact objective at the decomposition stored in ``splits`` (DFS order)."""
    if isinstance(node, Sum):
        parts = [v for v in next(splits)]
        pieces = parts + [h - sum(parts)] if parts else [h]
        return sum(_replay(c, x, splits, nu, grid) for c, x in zip(node.children, pieces))
    if isinstance(node, Intersect):
        return max(_replay(c, h, splits, nu, grid) for c in node.children)
    if isinstance(node, Scaled):
        return node.factor * _replay(node.child, h, splits, nu, grid)
    return node.value(h, nu, grid)


def _trivial_upper(node, h, nu, grid):
    """Upper bound assigning all of ``h`` to the cheapest part of every sum."""
    if isinstance(node, Sum):
        return min(_trivial_upper(c, h, nu, grid) for c in node.children)
    if isinstance(node, Intersect):
        return max(_trivial_upper(c, h, nu, grid) for c in node.children)
    if isinstance(node, Scaled):
        return node.factor * _trivial_upper(node.child, h, nu, grid)
    return node.value(h, nu, grid)


_CACHE: OrderedDict = OrderedDict()
_CACHE_LOCK = threading.Lock()
_CACHE_SIZE = 256


def _compiled(expr, nu_w, n_w):
    key = (expr, nu_w.tobytes(), n_w.tobytes())
    with _CACHE_LOCK:
        hit = _CACHE.get(key)
        if hit is not None:
            _CACHE.move_to_end(key)
            return hit
    built = _Compiled(expr, nu_w, n_w)
    with _CACHE_LOCK:
        _CACHE[key] = built
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return built


@dataclass(frozen=True)
class NormCertificate:
    """``lower <= true norm <= value``; ``lower`` is 0 when no certificate exists."""

    value: float
    lower: float
    trivial_upper: float
    status: str


def _prepare(g, nu, grid):
    v = g.values if isinstance(g, Integrand) else np.asarray(g, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape != (nu.size, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({nu.size}, {grid.size})")
    active = nu.weights > 0
    sub_nu = NuGrid(nu.weights[active])
    v = v[active]
    scale = float(np.abs(v).max()) if v.size else 0.0
    if scale == 0.0:
        return None, sub_nu, 0.0
    canon = v / scale
    # norms are even; fix the sign so that g and -g solve the same program
    nz = canon.ravel()[np.flatnonzero(canon.ravel())[0]]
    if nz < 0:
        canon = -canon
    return canon, sub_nu, scale


def certify_norm(expr, g, nu, grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Evaluate ``expr`` at ``g`` with a two-sided bound.

    Raises
    ------
    ConvergenceError
        The solver did not reach an optimal status; carries the best upper bound.
    """
    h, sub_nu, scale = _prepare(g, nu, grid)
    if h is None:
        return NormCertificate(0.0, 0.0, 0.0, "zero")
    trivial = _trivial_upper(expr, h, sub_nu, grid)
    # all nodes are lattice norms, so an optimal split lives on supp(g); with a
    # single entry every split is a scalar one and the cheapest part wins
    if not expr.has_sum or np.count_nonzero(h) == 1:
        return NormCertificate(scale * trivial, scale * trivial, scale * trivial, "exact")
    comp = _compiled(expr, sub_nu.weights, grid.weights)
    with comp.lock:
        comp.g.value = h
        status, error = None, None
        # relax the tolerance on numerical failure; the replay keeps the bound exact
        for t in (tol, 10 * tol, 100 * tol, 1000 * tol):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)
                    # no warm start: the result must not depend on earlier calls
                    comp.problem.solve(
                        solver=cp.CLARABEL,
                        warm_start=False,
                        max_iter=int(max_iter),
                        tol_gap_abs=t,
                        tol_gap_rel=t,
                        tol_feas=t,
                    )
            except cp.error.SolverError as exc:
                error = exc
                continue
            status = comp.problem.status
            if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                break
        else:
            detail = f"solver status {status}" if status else f"solver failed: {error}"
            raise ConvergenceError(detail, scale * trivial)
        splits = iter([[v.value for v in parts] for parts in comp.splits])
        dual = comp.eq.dual_value
    value = min(_replay(expr, h, splits, sub_nu, grid), trivial)
    lower = 0.0
    if dual is not None:
        # dual of u == g is minus a subgradient; convert to the weighted pairing
        phi = -np.asarray(dual) / (sub_nu.weights[:, None] * grid.weights[None, :])
        pairing = float(np.sum(phi * h * sub_nu.weights[:, None] * grid.weights[None, :]))
        bound = expr.dual_bound(phi, sub_nu, grid)
        if bound > 0 and np.isfinite(bound):
            lower = min(max(pairing / bound, 0.0), value)
    return NormCertificate(scale * value, scale * lower, scale * trivial, status)


def evaluate_norm(expr, g, nu, grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    return certify_norm(expr, g, nu, grid, tol, max_iter).value


def sum_norm(g, parts, nu, grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Infimal convolution ``inf { sum_i N_i(h_i) : sum_i h_i = g }``."""
    parts = tuple(parts)
    if not parts:
        raise ValueError("sum_norm needs at least one part")
    return evaluate_norm(Sum(parts), g, nu, grid, tol, max_iter)


def ipq_norm(g, p, q, nu, grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """The composite predictable norm for exponents ``(p, q)``."""
    return evaluate_norm(regime_select(p, q).expr, g, nu, grid, tol, max_iter)


def dual_norm_bruteforce(f, p, q, nu, grid, starts=8, seed=0, max_dim=6):
    """``sup { <f, g> : ipq_norm(g) <= 1 }`` by multi-start Nelder-Mead.

    Test oracle for tiny instances only; the pairing is
    ``sum_c sum_x f g nu_c n_x``.
    """
    v = f.values if isinstance(f, Integrand) else np.asarray(f, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.size > max_dim:
        raise DimensionTooLargeError(f"dimension {v.size} exceeds the brute-force cap {max_dim}")
    if v.shape != (nu.size, grid.size):
        raise DimensionError(f"integrand shape {v.shape} vs ({nu.size}, {grid.size})")
    weight = nu.weights[:, None] * grid.weights[None, :]
    if not np.any(v * weight):
        return 0.0
    expr = regime_select(p, q).expr
    shape = v.shape

    def ratio(x):
        h = x.reshape(shape)
        n = evaluate_norm(expr, h, nu, grid)
        if n <= 0:
            return 0.0
        return -float(np.sum(v * h * weight)) / n

    if v.size == 2:
        # the ratio is 0-homogeneous, so in the plane it is a function of the angle
        def by_angle(a):
            return ratio(np.array([np.cos(a), np.sin(a)]))

        angles = np.linspace(0.0, 2 * np.pi, 8 * starts + 1)[:-1]
        vals = np.array([by_angle(a) for a in angles])
        i = int(np.argmin(vals))
        step = angles[1] - angles[0]
        res = optimize.minimize_scalar(by_angle, bounds=(angles[i] - step, angles[i] + step),
                                       method="bounded", options={"xatol": 1e-10})
        return max(-float(vals[i]), -float(res.fun))

    rng = np.random.default_rng(seed)
    candidates = [v.ravel(), np.sign(v).ravel() + 0.0]
    candidates += [rng.standard_normal(v.size) for _ in range(starts)]
    best = 0.0
    for x0 in candidates:
        if not np.any(x0):
            continue
        res = optimize.minimize(
            ratio, x0, method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxfev": 300 * v.size},
        )
        best = max(best, -res.fun, -ratio(x0))
    return best
