"""Simulation and verification of maximal inequalities for L_q-valued
stochastic integrals against compensated random measures."""

__version__ = "0.1.0"

from .norms import Integrand, NuGrid, SpaceGrid, atomic_norm, lq_norm
from .random_measure import BernoulliCellsModel, PoissonModel, compensator_cumulative, replica_stream, sample
from .integrator import davis_split, integrate_path, sup_lq
from .regimes import dual_norm_bruteforce, ipq_norm, regime_select, sum_norm
from .montecarlo import bdg_check, estimate_lhs, hilbert_checks, ratio_report
from .oracle import enumerate_lhs, grid_search_sum_norm

__all__ = [
    "Integrand", "NuGrid", "SpaceGrid", "atomic_norm", "lq_norm",
    "BernoulliCellsModel", "PoissonModel", "compensator_cumulative", "replica_stream", "sample",
    "davis_split", "integrate_path", "sup_lq",
    "dual_norm_bruteforce", "ipq_norm", "regime_select", "sum_norm",
    "bdg_check", "estimate_lhs", "hilbert_checks", "ratio_report",
    "enumerate_lhs", "grid_search_sum_norm",
]
