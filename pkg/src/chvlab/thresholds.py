"""First-moment statistical threshold and chi-squared lower-tail bands."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .special import chi2_logcdf

# Explicit constants behind (C1 k)^m <= Pr[chi2_m <= k^2 m] <= (C2 k)^m, k <= 1/2.
# C1: the N(0,1) density is >= e^{-1/8}/sqrt(2 pi) on [-1/2, 1/2], so
# Pr[|N| <= k] >= 2 k e^{-1/8}/sqrt(2 pi). C2: the Chernoff bound
# k exp(1/2 - k^2/2) <= k e^{1/2}.
TAIL_C1 = 2.0 * math.exp(-1.0 / 8.0) / math.sqrt(2.0 * math.pi)
TAIL_C2 = math.exp(0.5)

_LOG_1E300 = 300.0 * math.log(10.0)


def log_grid_size(n: int, bound_b: int) -> float:
    """ln((2B+1)^n - 1)."""
    base = n * math.log(2 * bound_b + 1)
    return base + math.log1p(-math.exp(-base))


def log_expected_solution_count(n: int, m: int, bound_b: int, kappa: float) -> float:
    """ln of ((2B+1)^n - 1) * Pr[chi2_m < kappa^2 m]."""
    if n < 1 or m < 1 or bound_b < 1:
        raise DomainError("n, m, B must be positive")
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    if kappa == 0:
        return -math.inf
    return log_grid_size(n, bound_b) + chi2_logcdf(m, kappa * kappa * m)


def expected_solution_count(n: int, m: int, bound_b: int, kappa: float) -> float:
    """Expected number of CHV solutions in the full grid.

    Computed in log space; values at or above 1e300 come back as ``inf``
    (use :func:`log_expected_solution_count` there).
    """
    log_c = log_expected_solution_count(n, m, bound_b, kappa)
    return math.exp(log_c) if log_c < _LOG_1E300 else math.inf


def kappa_reference(n: int, m: int, bound_b: int) -> float:
    return (2 * bound_b + 1) ** (-n / m)


def kappa_comp_reference(n: int, m: int, bound_b: int) -> float:
    """sqrt(m/n) / B, the efficiently achievable scale (up to constants and logs)."""
    return math.sqrt(m / n) / bound_b


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    m: int
    bound_b: int
    kappa_stat: float
    kappa_ref: float
    expected_count: float

    @property
    def params(self) -> tuple[int, int, int, float]:
        return (self.n, self.m, self.bound_b, self.kappa_stat)

    @property
    def ref_over_exact(self) -> float:
        return self.kappa_ref / self.kappa_stat


def kappa_stat(n: int, m: int, bound_b: int, tol: float = 1e-10) -> ThresholdReport:
    """Root of expected_solution_count = 1, by bisection in log kappa."""
    if not n > m >= 1:
        raise DomainError("need n > m >= 1")

    def f(log_k):
        return log_expected_solution_count(n, m, bound_b, math.exp(log_k))

    ref = kappa_reference(n, m, bound_b)
    lo = hi = math.log(ref)
    while f(lo) >= 0:
        lo -= 1.0
    while f(hi) < 0:
        hi += 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    root = math.exp(0.5 * (lo + hi))
    return ThresholdReport(n, m, bound_b, root, ref, expected_solution_count(n, m, bound_b, root))


def tail_bound_check(m: int, kappa: float) -> tuple[float, bool]:
    """Pr[chi2_m <= kappa^2 m]^(1/m) / kappa, and whether it lies in [C1, C2].

    >>> round(tail_bound_check(1, 0.5)[0], 4)
    0.7659
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if not 0 < kappa <= 0.5:
        raise DomainError("the band is only claimed for 0 < kappa <= 1/2")
    ratio = math.exp(chi2_logcdf(m, kappa * kappa * m) / m) / kappa
    return ratio, TAIL_C1 <= ratio <= TAIL_C2
