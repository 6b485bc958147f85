"""Numeric checks of the explicit finite bounds behind the overlap-gap argument.

Each check computes an exact quantity (determinant, distance, lattice point
count), the closed-form bound it should respect, and whether it does.
These are theorems, so any ``holds = False`` is a bug somewhere.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import as_rng
from .errors import DomainError, EnumerationTooLargeError

TOL = 1e-9
MAX_ENUM = 100_000_000


# ---------------------------------------------------------------- determinant


def determinant_bound(r: int, beta: float) -> float:
    """(beta/2)^(r-1) * (beta/2 + (1-beta) r)."""
    return (beta / 2) ** (r - 1) * (beta / 2 + (1 - beta) * r)


@dataclass(frozen=True)
class OverlapMatrix:
    """Unit diagonal, off-diagonals in [1-beta, 1-beta+beta/(2r)]."""

    entries: np.ndarray
    beta: float

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        object.__setattr__(self, "entries", e)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 2:
            raise DomainError("overlap matrix must be square with r >= 2")
        if not 0 < self.beta < 1:
            raise DomainError("beta must lie in (0, 1)")
        if not np.array_equal(e, e.T):
            raise DomainError("overlap matrix must be symmetric")
        if not np.all(np.diag(e) == 1.0):
            raise DomainError("diagonal must be exactly 1")
        lo, hi = self.band
        off = e[~np.eye(self.r, dtype=bool)]
        if np.any(off < lo - TOL) or np.any(off > hi + TOL):
            raise DomainError(f"off-diagonal entries must lie in [{lo}, {hi}]")

    @property
    def r(self) -> int:
        return self.entries.shape[0]

    @property
    def band(self) -> tuple[float, float]:
        lo = 1 - self.beta
        return lo, lo + self.beta / (2 * self.r)

    @classmethod
    def random(cls, r: int, beta: float, seed=0) -> "OverlapMatrix":
        return cls(_random_overlaps(r, beta, 1, as_rng(seed))[0], beta)


def _random_overlaps(r, beta, count, rng):
    lo = 1 - beta
    hi = lo + beta / (2 * r)
    iu = np.triu_indices(r, 1)
    mats = np.zeros((count, r, r))
    mats[:, iu[0], iu[1]] = rng.uniform(lo, hi, size=(count, iu[0].size))
    mats += mats.transpose(0, 2, 1)
    mats[:, np.arange(r), np.arange(r)] = 1.0
    return mats


@dataclass(frozen=True)
class DeterminantCheck:
    det: float
    bound: float
    min_eig: float

    @property
    def psd(self) -> bool:
        return self.min_eig >= -TOL

    @property
    def holds(self) -> bool:
        return self.det >= self.bound * (1 - TOL) and self.psd


def determinant_bound_check(mat: OverlapMatrix) -> DeterminantCheck:
    """det (LU) and smallest eigenvalue (symmetric solver) against the bound."""
    e = mat.entries
    return DeterminantCheck(
        float(np.linalg.det(e)),
        determinant_bound(mat.r, mat.beta),
        float(np.linalg.eigvalsh(e)[0]),
    )


def determinant_sweep(r: int, beta: float, samples: int = 10_000, seed=0):
    """Batched version over ``samples`` random band matrices.

    Returns (min det, bound, min eigenvalue, failures).
    """
    if r < 2 or not 0 < beta < 1:
        raise DomainError("need r >= 2 and 0 < beta < 1")
    mats = _random_overlaps(r, beta, samples, as_rng(seed))
    dets = np.linalg.det(mats)
    eigs = np.linalg.eigvalsh(mats)[:, 0]
    bound = determinant_bound(r, beta)
    bad = (dets < bound * (1 - TOL)) | (eigs < -TOL)
    return float(dets.min()), bound, float(eigs.min()), int(np.count_nonzero(bad))


# ---------------------------------------------------------------- covering


@dataclass(frozen=True)
class CoveringCheck:
    index: int
    distance: float
    radius: float

    @property
    def holds(self) -> bool:
        return self.distance <= self.radius * (1 + TOL)


def _cone_split(x0, x):
    p = float(x @ x0)
    perp = float(np.linalg.norm(x - p * x0))
    return p, perp


def _shell_index(p, t):
    # largest i with (1+t)^i <= p; the log estimate can be off by one
    i = math.floor(math.log(p) / math.log1p(t))
    while (1 + t) ** (i + 1) <= p:
        i += 1
    while (1 + t) ** i > p:
        i -= 1
    return i


def covering_check(t: float, x0, x) -> CoveringCheck:
    """Locate the ball centred (1+t)^i x0, radius sqrt(5) t (1+t)^i, that should hold x.

    i = floor(log_{1+t} <x, x0>). Requires x within angle arctan(t) of the
    unit vector x0.

    >>> covering_check(0.5, [1.0, 0.0], [2.0, 0.0]).index
    1
    """
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    x0 = np.asarray(x0, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x0.shape != x.shape or x0.ndim != 1:
        raise DomainError("x0 and x must be vectors of equal length")
    if abs(np.linalg.norm(x0) - 1) > 1e-12:
        raise DomainError("x0 must be a unit vector")
    p, perp = _cone_split(x0, x)
    if p <= 0 or perp > t * p * (1 + 1e-12):
        raise DomainError("x lies outside the cone of angle arctan(t) around x0")
    i = _shell_index(p, t)
    scale = (1 + t) ** i
    return CoveringCheck(i, float(np.linalg.norm(x - scale * x0)), math.sqrt(5) * t * scale)


def sample_cone(t: float, x0, count: int, rng, log_range: float = 6.0):
    """Points uniform over cross-sections of the cone, log-uniform along the axis."""
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[0]
    p = np.exp(rng.uniform(-log_range, log_range, size=count))
    g = rng.standard_normal((count, n))
    g -= np.outer(g @ x0, x0)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = t * p * rng.uniform(size=count) ** (1.0 / max(n - 1, 1))
    return p[:, None] * x0[None, :] + rad[:, None] * g


def covering_sweep(samples: int = 100_000, max_n: int = 20, seed=0):
    """Random (t, x0, x) triples with n in [2, max_n].

    Returns (worst distance/radius, failures).
    """
    rng = as_rng(seed)
    worst = 0.0
    failures = 0
    done = 0
    while done < samples:
        batch = min(1000, samples - done)
        n = int(rng.integers(2, max_n + 1))
        t = float(rng.uniform(1e-3, 1.0))
        x0 = rng.standard_normal(n)
        x0 /= np.linalg.norm(x0)
        for x in sample_cone(t, x0, batch, rng):
            c = covering_check(t, x0, x)
            worst = max(worst, c.distance / c.radius)
            failures += not c.holds
        done += batch
    return worst, failures


# ---------------------------------------------------------------- lattice point counts


def _count_guarded(center, radius_sq):
    r = math.sqrt(radius_sq)
    size = float(np.prod(np.floor(center + r) - np.ceil(center - r) + 1))
    if size > MAX_ENUM:
        raise EnumerationTooLargeError(f"box of {size:.3g} points exceeds {MAX_ENUM}")
    return int(_kernels.count_ball_points(np.ascontiguousarray(center, dtype=np.float64), radius_sq))


@dataclass(frozen=True)
class CountCheck:
    exact: int
    bound: float

    @property
    def holds(self) -> bool:
        return self.exact <= self.bound


def ball_count_bound(n: int, rho: float) -> float:
    """rho^(-rho n) * (1 + 2 rho / (1 - rho))^n, the s = ln(1/rho) theta-sum bound."""
    return rho ** (-rho * n) * (1 + 2 * rho / (1 - rho)) ** n


def ball_count_bound_check(n: int, rho: float, center=None) -> CountCheck:
    """Integer points within distance sqrt(rho n) of ``center`` (default origin).

    The theta-sum argument peaks at integer centres, so the bound covers any centre.
    """
    if not 1 <= n <= 8:
        raise DomainError("n must lie in [1, 8]")
    if not 0 < rho <= 0.5:
        raise DomainError("rho must lie in (0, 1/2]")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=np.float64)
    if c.shape != (n,):
        raise DomainError("center must have length n")
    return CountCheck(_count_guarded(c, rho * n), ball_count_bound(n, rho))


def grid_ball_count_bound(m: int, r: float, gamma: float) -> float:
    """(r sqrt(2 pi e)/(gamma sqrt m) + sqrt(2 pi e)/2)^m."""
    s = math.sqrt(2 * math.pi * math.e)
    return (r * s / (gamma * math.sqrt(m)) + s / 2) ** m


def grid_ball_count_bound_check(m: int, r: float, gamma: float) -> CountCheck:
    """|ball_m(r) cap gamma Z^m| against the scaled lattice-point bound."""
    if not 1 <= m <= 6:
        raise DomainError("m must lie in [1, 6]")
    if r <= 0 or gamma <= 0:
        raise DomainError("r and gamma must be positive")
    if (2 * math.ceil(r / gamma) + 1) ** m > MAX_ENUM:
        raise EnumerationTooLargeError("(2 ceil(r/gamma) + 1)^m exceeds the enumeration limit")
    return CountCheck(_count_guarded(np.zeros(m), (r / gamma) ** 2), grid_ball_count_bound(m, r, gamma))


# ---------------------------------------------------------------- report

REPORT_FIELDS = ["claim", "params", "exact", "bound", "holds"]


@dataclass(frozen=True)
class ReportRow:
    claim: str
    params: str
    exact: float
    bound: float
    holds: bool

    def as_dict(self):
        return {"claim": self.claim, "params": self.params, "exact": repr(self.exact),
                "bound": repr(self.bound), "holds": str(self.holds).lower()}


def run_theory_checks(samples: int = 10_000, seed=0) -> list[ReportRow]:
    """Every sweep used to validate the bounds, one report row per parameter point.

    Randomized rows report the worst sample (smallest determinant, largest
    distance/radius, ...) and hold only if every sample held.
    """
    rng = as_rng(seed)
    rows = []
    for r in range(2, 9):
        for beta in (0.1, 0.3, 0.5):
            det, bound, eig, bad = determinant_sweep(r, beta, samples, rng)
            rows.append(ReportRow("determinant", f"r={r};beta={beta};samples={samples}", det, bound, bad == 0))

    worst, bad = covering_sweep(samples, 20, rng)
    rows.append(ReportRow("covering", f"n<=20;samples={samples}", worst, 1.0, bad == 0))

    for n in range(1, 7):
        for rho in (0.1, 0.2, 0.3, 0.4, 0.5):
            c = ball_count_bound_check(n, rho)
            rows.append(ReportRow("ball_count", f"n={n};rho={rho};center=0", c.exact, c.bound, c.holds))
    shifted = 0
    worst_gap = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, 7))
        rho = float(rng.uniform(0.01, 0.5))
        c = ball_count_bound_check(n, rho, rng.uniform(-1, 1, size=n))
        shifted += not c.holds
        worst_gap = max(worst_gap, c.exact / c.bound)
    rows.append(ReportRow("ball_count", f"n<=6;random_center;samples={samples}", worst_gap, 1.0, shifted == 0))

    for m, r, gamma in ((1, 1.0, 1.0), (2, 2.0, 1.0), (3, 2.5, 0.5), (4, 3.0, 1.0), (6, 2.0, 1.0)):
        c = grid_ball_count_bound_check(m, r, gamma)
        rows.append(ReportRow("grid_ball_count", f"m={m};r={r};gamma={gamma}", c.exact, c.bound, c.holds))
    bad = 0
    worst_gap = 0.0
    for _ in range(samples):
        m = int(rng.integers(1, 5))
        gamma = float(rng.uniform(0.2, 2.0))
        r = float(rng.uniform(0.05, 4.0)) * gamma
        c = grid_ball_count_bound_check(m, r, gamma)
        bad += not c.holds
        worst_gap = max(worst_gap, c.exact / c.bound)
    rows.append(ReportRow("grid_ball_count", f"m<=4;random;samples={samples}", worst_gap, 1.0, bad == 0))
    return rows


def write_report(rows, fh):
    w = csv.DictWriter(fh, REPORT_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row.as_dict())
