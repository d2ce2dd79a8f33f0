"""Monte Carlo estimation of maximal moments and the ratio/inequality reports.

All families evaluated against one ensemble share its patterns (common random
numbers), and every reduction is a numpy sum over a replica-ordered array, so
results do not depend on the number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .integrator import path_statistics
from .norms import Integrand, weighted_lq
from .random_measure import replica_stream, sample_batch
from .regimes import DEFAULT_MAX_ITER, DEFAULT_TOL, ipq_norm, regime_select

__all__ = [
    "MomentEstimate",
    "RatioRow",
    "Ensemble",
    "moment_estimate",
    "estimate_lhs",
    "ratio_report",
    "isometry_check",
    "HilbertRow",
    "hilbert_checks",
    "BDGReport",
    "bdg_check",
]

# offset that separates bootstrap streams from the sampling streams
_BOOTSTRAP_REPLICA = 1 << 62


@dataclass(frozen=True)
class MomentEstimate:
    """``value = (mean x^p)^(1/p)``; ``std_error`` is the SE of ``value``."""

    value: float
    std_error: float
    replicas: int
    seed: int
    moment: float = 0.0
    moment_se: float = 0.0


def moment_estimate(x, p, seed=0, se_method="delta", bootstrap=200):
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise InvalidInputError("at least two replicas are needed for a standard error")
    xp = x**p
    moment = float(np.sum(xp) / n)
    moment_se = float(np.std(xp, ddof=1) / math.sqrt(n))
    value = moment ** (1.0 / p)
    if moment == 0.0:
        return MomentEstimate(0.0, 0.0, n, seed, 0.0, 0.0)
    if se_method == "delta":
        se = moment_se * moment ** (1.0 / p - 1.0) / p
    elif se_method == "bootstrap":
        rng = replica_stream(seed, _BOOTSTRAP_REPLICA)
        idx = rng.integers(0, n, size=(bootstrap, n))
        boot = (xp[idx].sum(axis=1) / n) ** (1.0 / p)
        se = float(np.std(boot, ddof=1))
    else:
        raise InvalidInputError(f"unknown se_method {se_method!r}")
    return MomentEstimate(value, float(se), n, seed, moment, moment_se)


class Ensemble:
    """Patterns for replicas ``0..replicas-1`` of ``model`` under ``seed``."""

    def __init__(self, model, replicas, seed, workers=1):
        if int(replicas) < 2:
            raise InvalidInputError("replicas must be at least 2")
        self.model = model
        self.replicas = int(replicas)
        self.seed = int(seed)
        self.workers = int(workers)
        self._batch = None

    @property
    def batch(self):
        if self._batch is None:
            self._batch = sample_batch(self.model, self.seed, self.replicas, self.workers)
        return self._batch

    def stats(self, g, qs, grid):
        return path_statistics(g, self.batch, qs, grid)


def _ensemble(model, replicas, seed, workers, ensemble):
    if ensemble is not None:
        return ensemble
    return Ensemble(model, replicas, seed, workers)


def estimate_lhs(g, p, q, model, grid, replicas=10_000, seed=0, workers=1,
                 terminal=False, se_method="delta", ensemble=None):
    """Estimate ``(E sup_{t<=T} |M_t|_q^p)^(1/p)``; with ``terminal=True``
    the supremum is replaced by ``|M_T|_q``."""
    ens = _ensemble(model, replicas, seed, workers, ensemble)
    st = ens.stats(g, [q], grid)
    x = st.terminal_norm[float(q)] if terminal else st.sup[float(q)]
    return moment_estimate(x, p, ens.seed, se_method)


@dataclass(frozen=True)
class RatioRow:
    p: float
    q: float
    regime_case: int
    family: str
    lhs: float
    lhs_se: float
    rhs: float
    ratio: float
    replicas: int
    seed: int
    violation: bool = False

    FIELDS = ("p", "q", "regime_case", "family", "lhs", "lhs_se", "rhs", "ratio", "replicas", "seed")


def _label(g, i):
    if isinstance(g, tuple):
        return g
    label = getattr(g, "label", "") or f"g{i}"
    return label, g


def ratio_report(family, pq_list, model, grid, replicas=10_000, seed=0, workers=1,
                 tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, se_method="delta", ensemble=None):
    """One row per (integrand, p, q): Monte Carlo LHS against ``ipq_norm``.

    ``family`` holds Integrands (labelled) or ``(label, integrand)`` pairs.
    Rows are sorted by ``(p, q, label)``. ``ratio`` is NaN when both sides
    vanish; a positive LHS against a zero RHS is flagged as a violation.
    """
    members = [_label(g, i) for i, g in enumerate(family)]
    pq_list = [(float(p), float(q)) for p, q in pq_list]
    if not members or not pq_list:
        raise InvalidInputError("ratio_report needs a nonempty family and pq_list")
    ens = _ensemble(model, replicas, seed, workers, ensemble)
    nu = model.nu_grid()
    qs = sorted({q for _, q in pq_list})
    rows = []
    for label, g in members:
        st = ens.stats(g, qs, grid)
        for p, q in pq_list:
            est = moment_estimate(st.sup[q], p, ens.seed, se_method)
            rhs = ipq_norm(g, p, q, nu, grid, tol, max_iter)
            if rhs > 0:
                ratio, bad = est.value / rhs, False
            else:
                ratio, bad = float("nan"), est.value > 0
            rows.append(RatioRow(p, q, regime_select(p, q).case, label, est.value, est.std_error,
                                 rhs, ratio, ens.replicas, ens.seed, bad))
    rows.sort(key=lambda r: (r.p, r.q, r.family))
    return rows


def isometry_check(g, model, grid, replicas=10_000, seed=0, workers=1, ensemble=None):
    """``E sup_t |M_t|_2^2 / sum_x n_x <M,M>_T(x)`` and its standard error.

    The isometry gives 1 for the terminal value; Doob's inequality bounds the
    supremum by 4.
    """
    ens = _ensemble(model, replicas, seed, workers, ensemble)
    st = ens.stats(g, [2.0], grid)
    denom = float(np.sum(grid.weights * st.pb))
    est = moment_estimate(st.sup[2.0], 2.0, ens.seed)
    if denom == 0:
        return 0.0, 0.0
    return est.moment / denom, est.moment_se / denom


@dataclass(frozen=True)
class HilbertRow:
    inequality: str
    p: float
    applicable: bool
    lhs: float = float("nan")
    lhs_se: float = float("nan")
    rhs: float = float("nan")
    ratio: float = float("nan")
    ratio_se: float = float("nan")
    trivial: bool = False


_HILBERT_RANGES = {
    "sqh": (0.0, 2.0, False),
    "mejeto": (1.0, 2.0, True),
    "mejo": (2.0, math.inf, True),
}


def hilbert_checks(g, p, model, grid, replicas=10_000, seed=0, workers=1, ensemble=None):
    """Moment ratios ``E sup |M|_H^p / RHS`` for the three Hilbert-space bounds,
    with ``H = L_2`` on ``grid`` (a one-point grid gives ``H = R``).

    ``sqh``: RHS ``(int |g|^2 dnu)^(p/2)``, ``0 < p <= 2``.
    ``mejeto``: RHS ``int |g|^p dnu``, ``1 <= p <= 2``.
    ``mejo``: RHS the sum of both, ``p >= 2``.
    """
    p = float(p)
    ens = _ensemble(model, replicas, seed, workers, ensemble)
    v = g.values if isinstance(g, Integrand) else np.asarray(g, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    nu = model.nu_grid().weights
    h_norms = weighted_lq(v, 2.0, grid.weights, axis=1)
    square = float(np.sum(h_norms**2 * nu)) ** (p / 2)
    pth = float(np.sum(h_norms**p * nu))
    rhs = {"sqh": square, "mejeto": pth, "mejo": pth + square}
    st = ens.stats(v, [2.0], grid)
    est = moment_estimate(st.sup[2.0], p, ens.seed)
    rows = []
    for name, (lo, hi, closed_lo) in _HILBERT_RANGES.items():
        ok = (p >= lo if closed_lo else p > lo) and p <= hi
        if not ok:
            rows.append(HilbertRow(name, p, False))
            continue
        r = rhs[name]
        if r == 0:
            rows.append(HilbertRow(name, p, True, est.moment, est.moment_se, 0.0, 0.0, 0.0, trivial=True))
        else:
            rows.append(HilbertRow(name, p, True, est.moment, est.moment_se, r, est.moment / r, est.moment_se / r))
    return rows


@dataclass(frozen=True)
class BDGReport:
    p: float
    q: float
    sup: MomentEstimate
    bracket: MomentEstimate
    lower_ratio: float
    upper_ratio: float
    power_ratio: float
    power_ratio_se: float
    extra: dict = field(default_factory=dict)


def bdg_check(g, p, q, model, grid, replicas=10_000, seed=0, workers=1, ensemble=None):
    """Two-sided bracket comparison in ``L_p L_q``.

    ``lower_ratio = |[M,M]^(1/2)| / |M*|`` and ``upper_ratio`` its inverse;
    ``power_ratio = E |M*|^p / E |[M,M]^(1/2)|^p`` with a delta-method SE
    accounting for the correlation of both samples.
    """
    p, q = float(p), float(q)
    ens = _ensemble(model, replicas, seed, workers, ensemble)
    st = ens.stats(g, [q], grid)
    s, b = st.sup[q], st.bracket_norm[q]
    sup = moment_estimate(s, p, ens.seed)
    bracket = moment_estimate(b, p, ens.seed)
    if sup.value == 0 or bracket.value == 0:
        return BDGReport(p, q, sup, bracket, 0.0, 0.0, 0.0, 0.0)
    sp, bp = s**p, b**p
    n = s.size
    ma, mb = sup.moment, bracket.moment
    cov = np.cov(sp, bp, ddof=1)
    var = cov[0, 0] / mb**2 - 2 * ma * cov[0, 1] / mb**3 + ma**2 * cov[1, 1] / mb**4
    return BDGReport(
        p, q, sup, bracket,
        bracket.value / sup.value,
        sup.value / bracket.value,
        ma / mb,
        float(math.sqrt(max(var, 0.0) / n)),
    )
