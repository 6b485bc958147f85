"""Kernel rounding: scale a random kernel vector of A and round it into the grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChvInstance, GridVector, Seed, as_rng, project_to_kernel
from .errors import DomainError, RetryExhaustedError
from .special import ln_plus

MAX_ATTEMPTS = 16
_MIN_KERNEL_FRACTION = 1e-6


@dataclass(frozen=True)
class KernelConfig:
    bound_b: int
    k_const: int = 2

    def __post_init__(self):
        if self.k_const < 2:
            raise DomainError("K must be >= 2")
        if self.bound_b < 1:
            raise DomainError("B must be >= 1")

    @property
    def scale(self) -> float:
        """Per-coordinate standard deviation B / sqrt(4 K ln+ B) of the pre-rounding vector."""
        return self.bound_b / math.sqrt(4 * self.k_const * ln_plus(self.bound_b))


def round_clamp(v, bound_b: int):
    """Nearest integer (ties to even) when |v| <= B, otherwise B * sign(v).

    Works on scalars and arrays.

    >>> round_clamp(2.5, 3), round_clamp(-7.1, 3)
    (2, -3)
    """
    arr = np.asarray(v, dtype=np.float64)
    out = np.where(np.abs(arr) <= bound_b, np.rint(arr), bound_b * np.sign(arr)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def rounding_residual(v, bound_b: int):
    """{v}_B = v - round_clamp(v, B), coordinate-wise."""
    arr = np.asarray(v, dtype=np.float64)
    return arr - round_clamp(arr, bound_b)


@dataclass(frozen=True)
class KernelRoundResult:
    z: GridVector
    x: np.ndarray  # pre-rounding kernel vector
    attempts: int
    seed: Seed


def kernel_round_details(inst: ChvInstance, cfg: KernelConfig, seed: Seed,
                         direction=None) -> KernelRoundResult:
    """:func:`kernel_round` returning the pre-rounding vector as well.

    ``direction`` replaces the Gaussian draw that is projected onto ker(A)
    (used to test sign equivariance); the length draw still comes from
    ``seed``. An all-zero rounding, or a draw with almost no component in
    ker(A), is retried on the next stream id.
    """
    a = inst.a
    n = inst.n
    for attempt in range(MAX_ATTEMPTS):
        s = seed.stream(seed.stream_id + attempt)
        rng = s.rng()
        g = rng.standard_normal(n) if direction is None else np.asarray(direction, dtype=np.float64)
        length = np.linalg.norm(rng.standard_normal(n))  # sqrt(chi^2_n), independent of g
        u = project_to_kernel(a, g)
        u_norm = np.linalg.norm(u)
        # g (almost) in the row space of A leaves no usable kernel direction
        if u_norm > _MIN_KERNEL_FRACTION * np.linalg.norm(g):
            x = u * (length * cfg.scale / u_norm)
            z = round_clamp(x, cfg.bound_b)
            if np.any(z):
                return KernelRoundResult(z, x, attempt + 1, s)
        if direction is not None:
            break
    raise RetryExhaustedError(
        f"kernel rounding produced the zero vector or a degenerate direction {MAX_ATTEMPTS} times")


def kernel_round(inst: ChvInstance, cfg: KernelConfig, seed: Seed, direction=None) -> GridVector:
    """Sample a Haar-random kernel direction of A, give it length
    sqrt(chi^2_n) * B / sqrt(4 K ln+ B), and round-with-clamp to the grid.
    """
    return kernel_round_details(inst, cfg, seed, direction).z


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    samples: np.ndarray

    def tail(self, t: float) -> float:
        """Empirical Pr[residual^2 >= t]."""
        return float(np.count_nonzero(self.samples >= t)) / self.samples.shape[0]

    def cdf(self, t: float) -> float:
        return float(np.searchsorted(self.samples, t, side="right")) / self.samples.shape[0]


def rounding_residual_stats(n: int, bound_b: int, k_const: int = 2, seed=0) -> ResidualStats:
    """Monte Carlo sample of {L N}_B^2 with L = B / sqrt(4 K ln+ B), N ~ N(0, 1)."""
    if n < 1000:
        raise DomainError("need at least 1000 samples")
    cfg = KernelConfig(bound_b, k_const)
    v = cfg.scale * as_rng(seed).standard_normal(n)
    r2 = np.sort(rounding_residual(v, bound_b) ** 2)
    return ResidualStats(float(r2.mean()), r2)
