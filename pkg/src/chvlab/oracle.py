"""Exhaustive reference solver for small instances."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .core import ChvInstance, GridVector, achieved_ratio
from .errors import DomainError, EnumerationTooLargeError

MAX_GRID_POINTS = 200_000_000


@dataclass(frozen=True)
class OracleResult:
    best_x: GridVector
    best_ratio: float
    solution_count_at: tuple[float, int] | None = None


def _guard(inst: ChvInstance):
    size = (2 * inst.bound_b + 1) ** inst.n
    if size > MAX_GRID_POINTS:
        raise EnumerationTooLargeError(
            f"(2B+1)^n = {size} exceeds the enumeration limit {MAX_GRID_POINTS}"
        )


def _walk(inst: ChvInstance, kappa: float):
    _guard(inst)
    return _kernels.enumerate_grid(inst.a, int(inst.bound_b), float(kappa) ** 2 * inst.m)


def brute_force_best(inst: ChvInstance, *, with_count: bool = True) -> OracleResult:
    """Minimize the achieved ratio over every nonzero grid vector.

    Only canonical representatives (first nonzero entry positive) compete;
    ties keep the lexicographically smallest. The reported ratio is
    recomputed from scratch for the winner.
    """
    best, _, count = _walk(inst, inst.kappa)
    ratio = achieved_ratio(inst, best)
    return OracleResult(best, ratio, (inst.kappa, int(count)) if with_count else None)


def count_solutions(inst: ChvInstance, kappa: float | None = None) -> int:
    """Exact number of nonzero x (both signs) with ratio < kappa.

    ``kappa`` defaults to the instance's own; any positive value is allowed.
    """
    k = inst.kappa if kappa is None else kappa
    if not k > 0:
        raise DomainError("kappa must be positive")
    return int(_walk(inst, k)[2])


# golden fixtures ----------------------------------------------------------

GOLDEN_FIELDS = ["seed", "stream_id", "n", "m", "B", "kappa", "best_x", "best_ratio", "count"]


def write_golden(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, GOLDEN_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def read_golden(path):
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for key in ("seed", "stream_id", "n", "m", "B", "count"):
            r[key] = int(r[key])
        r["kappa"] = float(r["kappa"])
        r["best_ratio"] = float(r["best_ratio"])
        r["best_x"] = np.array([int(v) for v in r["best_x"].split()], dtype=np.int64)
    return rows
