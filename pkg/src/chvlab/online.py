"""Streaming solver: commit x_t = +-b per column, keeping ||sum x_i a_i|| small.

The temperature b starts at the largest power of two <= B and is halved
stage by stage down to 1 ("cooling"), which is what buys the factor of B
in the achieved contraction.
"""
from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import GridVector
from .errors import DomainError, InfeasibleScheduleError

DEFAULT_K = 3


def effective_bound(b_max: int) -> int:
    """Largest power of two not exceeding ``b_max``."""
    if b_max < 1:
        raise DomainError("B must be >= 1")
    return 1 << (int(b_max).bit_length() - 1)


@dataclass(frozen=True)
class CoolSchedule:
    """Ordered (temperature, steps) stages; ``m`` is the column dimension."""

    stages: tuple[tuple[int, int], ...]
    k_const: int = DEFAULT_K
    m: int | None = None

    def __post_init__(self):
        stages = tuple((int(b), int(s)) for b, s in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise DomainError("schedule needs at least one stage")
        temps = [b for b, _ in stages]
        if any(b < 1 or b & (b - 1) for b in temps):
            raise DomainError("temperatures must be powers of two")
        if temps[-1] != 1:
            raise DomainError("schedule must end at temperature 1")
        if any(hi != 2 * lo for hi, lo in zip(temps, temps[1:])):
            raise DomainError("temperatures must halve from stage to stage")
        if any(s < 0 for _, s in stages):
            raise DomainError("stage lengths must be nonnegative")
        if self.m is not None and any(s != self.k_const * self.m for _, s in stages[1:]):
            raise DomainError("every stage after the first must have K*m steps")

    @property
    def n(self) -> int:
        return sum(s for _, s in self.stages)

    @property
    def b_max(self) -> int:
        return self.stages[0][0]

    def temperatures(self) -> np.ndarray:
        """Per-step temperature array of length n."""
        return np.repeat(
            np.array([b for b, _ in self.stages], dtype=np.int64),
            [s for _, s in self.stages],
        )

    def x_norm_sq(self) -> int:
        """||x||^2 of any output: sum of temp^2 * steps."""
        return sum(b * b * s for b, s in self.stages)


def build_schedule(n: int, m: int, b_max: int, k_const: int = DEFAULT_K) -> CoolSchedule:
    """Stages [(B', n - K m log2 B'), (B'/2, K m), ..., (1, K m)].

    Raises InfeasibleScheduleError when n <= K m log2 B'.

    >>> build_schedule(1000, 10, 4, 3).stages
    ((4, 940), (2, 30), (1, 30))
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    if k_const < 1:
        raise DomainError("K must be >= 1")
    top = effective_bound(b_max)
    levels = top.bit_length() - 1
    tail = k_const * m * levels
    if n <= tail:
        raise InfeasibleScheduleError(
            f"infeasible schedule: n={n} must exceed K*m*log2(B')={k_const}*{m}*{levels}={tail}"
        )
    stages = [(top, n - tail)] + [(top >> j, k_const * m) for j in range(1, levels + 1)]
    return CoolSchedule(tuple(stages), k_const, m)


@dataclass(frozen=True)
class CoolState:
    y: np.ndarray
    t: int = 0
    l: float = 0.0

    @classmethod
    def initial(cls, m: int) -> "CoolState":
        return cls(np.zeros(m), 0, 0.0)


def cool_step(state: CoolState, column, temp: int) -> tuple[int, CoolState]:
    """One step: move y to y + temp*a or y - temp*a, whichever is shorter.

    Ties go to +temp.
    """
    a = np.asarray(column, dtype=np.float64)
    if a.shape != state.y.shape:
        raise DomainError("column length does not match the state dimension")
    step = temp * a
    yp = state.y + step
    ym = state.y - step
    plus = float(yp @ yp)
    minus = float(ym @ ym)
    if plus <= minus:
        return temp, CoolState(yp, state.t + 1, math.sqrt(plus))
    return -temp, CoolState(ym, state.t + 1, math.sqrt(minus))


def _stream_run(columns: Iterable, temps: np.ndarray):
    n = temps.shape[0]
    it = iter(columns)
    x = np.empty(n, dtype=np.int64)
    ls = np.empty(n + 1)
    ls[0] = 0.0
    state = None
    for t in range(n):
        try:
            col = next(it)
        except StopIteration:
            raise DomainError(f"column stream ended after {t} of {n} columns") from None
        if state is None:
            state = CoolState.initial(len(col))
        x[t], state = cool_step(state, col, int(temps[t]))
        ls[t + 1] = state.l
    if next(it, None) is not None:
        raise DomainError(f"column stream is longer than the schedule length {n}")
    return x, state.y, ls


def _run(columns, temps):
    if isinstance(columns, np.ndarray):
        a = np.ascontiguousarray(columns, dtype=np.float64)
        if a.ndim != 2:
            raise DomainError("expected an m x n matrix of columns")
        if a.shape[1] != temps.shape[0]:
            raise DomainError(f"matrix has {a.shape[1]} columns, schedule expects {temps.shape[0]}")
        return _kernels.cool_run(a, temps)
    return _stream_run(columns, temps)


def run_cool(columns, schedule: CoolSchedule) -> GridVector:
    """Run the cooling schedule over ``columns`` and return x.

    ``columns`` is either an m x n matrix or any one-pass iterable of
    length-m vectors (e.g. :func:`chvlab.matrix_io.iter_columns`).
    """
    x, _, _ = _run(columns, schedule.temperatures())
    return x


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    l: np.ndarray
    temp: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def rows(self):
        for t, l, b in zip(self.t, self.l, self.temp):
            yield int(t), float(l), int(b)


def track_trajectory(columns, schedule: CoolSchedule | None = None, *, temperature: int | None = None,
                     n: int | None = None) -> Trajectory:
    """Like :func:`run_cool` but records ||y_t|| for t = 0..n.

    Pass ``temperature`` (and ``n`` when streaming) instead of a schedule to
    run at a single fixed temperature. Record t carries the temperature
    used for step t+1; the last record repeats the final temperature.
    """
    if (schedule is None) == (temperature is None):
        raise DomainError("give exactly one of schedule or temperature")
    if schedule is not None:
        temps = schedule.temperatures()
    else:
        if temperature < 1:
            raise DomainError("temperature must be positive")
        if n is None:
            if not isinstance(columns, np.ndarray):
                raise DomainError("n is required for a fixed-temperature stream")
            n = columns.shape[1]
        temps = np.full(n, int(temperature), dtype=np.int64)
    x, y, ls = _run(columns, temps)
    steps = np.arange(temps.shape[0] + 1)
    rec_temps = np.append(temps, temps[-1])
    return Trajectory(steps, ls, rec_temps, x, y)
