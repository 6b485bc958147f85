"""Continuous LWE samples and the mod-1 distinguisher built from a CHV solution.

Given a short integer x with A x ~ 0, b^T x mod 1 = s^T A x + e^T x mod 1
concentrates near 0 for planted samples and is uniform for null samples,
so testing |b^T x mod 1| < 1/4 tells them apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridVector, Seed, as_rng, check_grid_vector
from .errors import DomainError

PLANTED = "planted"
NULL = "null"

# Replaced by tests to observe the secret before it is discarded.
_secret_hook = None


def mod1(v):
    """Representative of v mod 1 in [-1/2, 1/2).

    Exact in floating point, idempotent and never larger in magnitude than v.

    >>> float(mod1(0.75)), float(mod1(-0.5)), float(mod1(3.0))
    (-0.25, -0.5, 0.0)
    """
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("mod1 needs finite entries")
    r = arr - np.round(arr)
    r = np.where(r == 0.5, -0.5, r)
    return r if r.ndim else float(r)


@dataclass(frozen=True, eq=False)
class ClweSample:
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    kind: str
    gamma_norm: float | None = None
    beta_noise: float | None = None

    def __post_init__(self):
        if self.kind not in (PLANTED, NULL):
            raise DomainError(f"kind must be {PLANTED!r} or {NULL!r}")
        b = np.asarray(self.b, dtype=np.float64)
        if np.any(b < -0.5) or np.any(b >= 0.5):
            raise DomainError("b must lie in [-1/2, 1/2)")


def _draw_secret(rng, m, gamma_norm):
    s = rng.standard_normal(m)
    s *= gamma_norm / np.linalg.norm(s)
    if _secret_hook is not None:
        _secret_hook(s)
    return s


def sample_planted(a, gamma_norm: float, beta_noise: float, seed=0) -> ClweSample:
    """b = mod1(s^T A + e^T) with ||s|| = gamma and e ~ N(0, beta^2)^n.

    s and e are not kept.
    """
    if not gamma_norm > 0 or not beta_noise > 0:
        raise DomainError("gamma and beta must be positive")
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DomainError("A must be a matrix")
    m, n = a.shape
    rng = as_rng(seed)
    s = _draw_secret(rng, m, gamma_norm)
    e = beta_noise * rng.standard_normal(n)
    return ClweSample(a, mod1(s @ a + e), PLANTED, gamma_norm, beta_noise)


def sample_null(n: int, seed=0) -> np.ndarray:
    """n independent uniform draws from [-1/2, 1/2)."""
    if n < 1:
        raise DomainError("n must be positive")
    return as_rng(seed).random(n) - 0.5


_SPLITTER = 134217729.0  # 2^27 + 1


def _two_product(a, b):
    # a*b == p + e exactly (Dekker), barring overflow
    p = a * b
    c = _SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def inner_mod1(b, x) -> float:
    """mod1(b^T x) for integer x, accurate to about ulp(n).

    Products are split exactly, each piece is reduced mod 1 (exact), and the
    pieces are summed with a correctly rounded sum, so large b^T x loses
    nothing before the reduction.
    """
    b = np.asarray(b, dtype=np.float64)
    p, e = _two_product(b, np.asarray(x, dtype=np.float64))
    return float(mod1(math.fsum(np.concatenate([mod1(p), mod1(e)]).tolist())))


def distinguish(b, x) -> int:
    """1 iff |mod1(b^T x)| < 1/4."""
    x = check_grid_vector(x)
    if np.asarray(b).shape != x.shape:
        raise DomainError("b and x must have the same length")
    return int(abs(inner_mod1(b, x)) < 0.25)


# ---------------------------------------------------------------- reduction demo


def synthetic_witness_instance(n: int, m: int, bound_b: int, rng) -> tuple[np.ndarray, GridVector]:
    """Draw x in [-B, B]^n \\ {0}, then a Gaussian A conditioned on A x = 0.

    Conditioning projects every row of a fresh Gaussian matrix orthogonally to x.
    """
    x = np.zeros(n, dtype=np.int64)
    while not np.any(x):
        x = rng.integers(-bound_b, bound_b + 1, size=n)
    g = rng.standard_normal((m, n))
    xf = x.astype(np.float64)
    a = g - np.outer(g @ xf, xf) / (xf @ xf)
    return a, x


@dataclass(frozen=True)
class ReductionDemo:
    n: int
    m: int
    bound_b: int
    gamma_norm: float
    beta_noise: float
    kappa: float
    trials: int
    acc_planted: float
    acc_null: float
    witness: str = "synthetic"

    @property
    def advantage(self) -> float:
        return abs(self.acc_planted - self.acc_null)

    @property
    def witness_quality(self) -> float:
        """gamma * kappa * B * sqrt(n); the advantage claim needs this small."""
        return self.gamma_norm * self.kappa * self.bound_b * math.sqrt(self.n)

    @property
    def conclusive(self) -> bool:
        return self.witness_quality <= 0.01

    CSV_FIELDS = ("witness", "n", "m", "B", "gamma", "beta", "kappa", "trials",
                  "acc_planted", "acc_null", "advantage", "conclusive")

    def row(self) -> dict:
        return {"witness": self.witness, "n": self.n, "m": self.m, "B": self.bound_b,
                "gamma": repr(self.gamma_norm), "beta": repr(self.beta_noise),
                "kappa": repr(self.kappa), "trials": self.trials,
                "acc_planted": repr(self.acc_planted), "acc_null": repr(self.acc_null),
                "advantage": repr(self.advantage), "conclusive": str(self.conclusive).lower()}


def reduction_demo(n: int, m: int, bound_b: int, gamma_norm: float, beta_noise: float,
                   seed=0, trials: int = 10_000, null_only: bool = False) -> ReductionDemo:
    """Empirical advantage of the distinguisher fed a planted CHV witness.

    Each trial draws a fresh (A, x) with A x = 0 exactly, then one planted
    and one null b for that A, and runs :func:`distinguish` on both. With
    ``null_only`` the "planted" side is another null draw, so the advantage
    measures pure sampling noise. The recorded kappa is the witness's
    achieved ratio (0 up to rounding).
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    if not 1 <= m < n:
        raise DomainError("need 1 <= m < n")
    base = seed if isinstance(seed, Seed) else Seed(int(seed))
    hits_p = 0
    hits_n = 0
    worst_kappa = 0.0
    for t in range(trials):
        rng = base.stream(base.stream_id + t).rng()
        a, x = synthetic_witness_instance(n, m, bound_b, rng)
        xf = x.astype(np.float64)
        worst_kappa = max(worst_kappa, float(np.linalg.norm(a @ xf) / (math.sqrt(m) * np.linalg.norm(xf))))
        if null_only:
            b1 = sample_null(n, rng)
        else:
            b1 = sample_planted(a, gamma_norm, beta_noise, rng).b
        hits_p += distinguish(b1, x)
        hits_n += distinguish(sample_null(n, rng), x)
    return ReductionDemo(n, m, bound_b, gamma_norm, beta_noise, worst_kappa, trials,
                         hits_p / trials, hits_n / trials)
