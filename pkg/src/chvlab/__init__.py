"""Contracting hypergrid vectors: solvers, oracle, thresholds and reductions.

Find nonzero x in ([-B, B] cap Z)^n with ||A x|| < kappa sqrt(m) ||x|| for a
Gaussian m x n matrix A, and study how small kappa can be pushed.
"""
from ._jit import USE_NUMBA
from .core import ChvInstance, Seed, achieved_ratio, sample_gaussian_matrix, spectral_norm
from .errors import (ChvError, DomainError, EnumerationTooLargeError, FormatError,
                     InfeasibleScheduleError, NumericalRankError, RetryExhaustedError)
from .kernel import KernelConfig, kernel_round
from .online import CoolSchedule, build_schedule, run_cool, track_trajectory
from .oracle import brute_force_best, count_solutions
from .thresholds import expected_solution_count, kappa_stat, tail_bound_check

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "ChvInstance", "Seed", "achieved_ratio", "sample_gaussian_matrix", "spectral_norm",
    "ChvError", "DomainError", "EnumerationTooLargeError", "FormatError", "InfeasibleScheduleError",
    "NumericalRankError", "RetryExhaustedError", "KernelConfig", "kernel_round", "CoolSchedule",
    "build_schedule", "run_cool", "track_trajectory", "brute_force_best", "count_solutions",
    "expected_solution_count", "kappa_stat", "tail_bound_check",
]
