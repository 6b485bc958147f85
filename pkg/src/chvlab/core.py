"""Shared primitives: seeded streams, CHV instances, ratios and projections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import DomainError, NumericalRankError
from .special import chi2_cdf, chi2_logcdf, ln_plus  # noqa: F401  (re-exported)

GridVector = npt.NDArray[np.int64]

_UINT64_MAX = 2**64 - 1
_MAX_COND = 1e12


@dataclass(frozen=True)
class Seed:
    """Key of an independent random stream.

    Streams come from the counter-based Philox generator keyed by
    ``(seed, stream_id)``; normals use numpy's ziggurat sampler. The same
    pair always reproduces the same draws bit for bit.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _UINT64_MAX):
                raise DomainError(f"{name} must fit in an unsigned 64-bit integer, got {v}")

    def rng(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def stream(self, stream_id: int) -> "Seed":
        return Seed(self.seed, stream_id)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    return Seed(int(seed)).rng()


def sample_gaussian_matrix(m: int, n: int, variance: float = 1.0, seed=0) -> np.ndarray:
    """m x n matrix of independent N(0, variance) draws."""
    if m < 1 or n < 1:
        raise DomainError(f"matrix dimensions must be positive, got {m}x{n}")
    if not variance > 0:
        raise DomainError("variance must be positive")
    g = as_rng(seed).standard_normal((m, n))
    if variance != 1.0:
        g *= math.sqrt(variance)
    return g


@dataclass(frozen=True)
class ChvInstance:
    """A CHV search problem: find nonzero x in ([-B, B] cap Z)^n with
    ||A x|| < kappa * sqrt(m) * ||x||."""

    a: np.ndarray = field(repr=False)
    n: int
    m: int
    bound_b: int
    kappa: float

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=np.float64)
        object.__setattr__(self, "a", a)
        if a.shape != (self.m, self.n):
            raise DomainError(f"matrix shape {a.shape} does not match (m, n) = ({self.m}, {self.n})")
        if not (1 <= self.m < self.n):
            raise DomainError(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        if self.bound_b < 1:
            raise DomainError("B must be >= 1")
        if not (0.0 < self.kappa < 1.0):
            raise DomainError("kappa must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @classmethod
    def sample(cls, n: int, m: int, bound_b: int, kappa: float, seed) -> "ChvInstance":
        return cls(sample_gaussian_matrix(m, n, 1.0, seed), n, m, bound_b, kappa)

    @classmethod
    def from_matrix(cls, a, bound_b: int, kappa: float) -> "ChvInstance":
        a = np.asarray(a, dtype=np.float64)
        return cls(a, a.shape[1], a.shape[0], bound_b, kappa)

    def is_solution(self, x) -> bool:
        x = check_grid_vector(x, self.bound_b)
        return achieved_ratio(self, x) < self.kappa


def check_grid_vector(x, bound_b: int | None = None, *, nonzero: bool = True) -> GridVector:
    """Validate and return ``x`` as an int64 vector with entries in [-B, B]."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DomainError("grid vector must be one-dimensional")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise DomainError("grid vector entries must be integers")
    elif arr.dtype.kind not in "iu":
        raise DomainError(f"unsupported dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if bound_b is not None and np.any(np.abs(arr) > bound_b):
        raise DomainError(f"entries must lie in [-{bound_b}, {bound_b}]")
    if nonzero and not np.any(arr):
        raise DomainError("the zero vector is never a solution")
    return arr


def _matrix_of(inst_or_a):
    if isinstance(inst_or_a, ChvInstance):
        return inst_or_a.a, inst_or_a.bound_b
    return np.asarray(inst_or_a, dtype=np.float64), None


def achieved_ratio(inst, x) -> float:
    """||A x|| / (sqrt(m) ||x||); x is a solution iff this is below kappa.

    ``inst`` may be a :class:`ChvInstance` (entries are then bound-checked)
    or a bare matrix.
    """
    a, bound = _matrix_of(inst)
    x = check_grid_vector(x, bound)
    if x.shape[0] != a.shape[1]:
        raise DomainError("length of x does not match the number of columns")
    y = a @ x.astype(np.float64)
    return float(np.linalg.norm(y) / (math.sqrt(a.shape[0]) * np.linalg.norm(x.astype(np.float64))))


def exact_ratio(inst, x) -> float:
    """achieved_ratio recomputed with correctly rounded sums (math.fsum).

    Slow; meant for verifying oracle and solver outputs.
    """
    a, bound = _matrix_of(inst)
    x = check_grid_vector(x, bound)
    xs = [int(v) for v in x]
    ys = [math.fsum(float(a_ij) * v for a_ij, v in zip(row, xs)) for row in a]
    num = math.sqrt(math.fsum(v * v for v in ys))
    den = math.sqrt(sum(v * v for v in xs))
    return num / (math.sqrt(a.shape[0]) * den)


def project_to_kernel(a, g) -> np.ndarray:
    """Orthogonal projection of ``g`` onto ker(A): g - A^T (A A^T)^{-1} A g.

    The Gram matrix is Cholesky-factored; a (numerically) rank-deficient
    ``a`` raises :class:`NumericalRankError` instead of regularizing.
    """
    a = np.asarray(a, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if a.ndim != 2 or g.shape != (a.shape[1],):
        raise DomainError("shape mismatch between matrix and vector")
    gram = a @ a.T
    if not np.all(np.isfinite(gram)):
        raise NumericalRankError("non-finite Gram matrix")
    cond = np.linalg.cond(gram)
    if not cond <= _MAX_COND:
        raise NumericalRankError(f"A A^T is numerically singular (condition number {cond:.3g})")
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError("A A^T is not positive definite") from exc
    coef = scipy.linalg.cho_solve(factor, a @ g, check_finite=False)
    return g - a.T @ coef


def spectral_norm(a, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    """Largest singular value of ``a`` by power iteration.

    Iterates on the smaller of A^T A and A A^T (same top eigenvalue). Starts
    from the all-ones vector, re-randomizing if the iterate collapses; a
    second pass from a fixed pseudo-random start guards against the
    all-ones vector lying in a lower eigenspace.
    """
    a = np.asarray(a, dtype=np.float64)
    if not np.any(a):
        raise DomainError("spectral_norm of the zero matrix")
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    k = gram.shape[0]
    fallback = Seed(0x5EED, 0).rng()

    def iterate(v):
        lam = 0.0
        for _ in range(max_iter):
            w = gram @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                v = fallback.standard_normal(k)
                v /= np.linalg.norm(v)
                continue
            v = w / norm
            if abs(norm - lam) <= tol * norm:
                return norm
            lam = norm
        return lam

    lam1 = iterate(np.full(k, 1.0 / math.sqrt(k)))
    v2 = fallback.standard_normal(k)
    lam2 = iterate(v2 / np.linalg.norm(v2))
    return math.sqrt(max(lam1, lam2))
