"""Rounded Johnson-Lindenstrauss hash: x -> floor(A x) on the grid gamma Z^m.

The hash compresses ([0, B] cap Z)^n into ball_m(r) cap gamma Z^m. Expansion
is controlled by the spectral norm of A; exhibiting a contracting pair
(y, z) hands over y - z as a CHV solution for sqrt(m) A, which is what
makes contraction computationally hard to find.
"""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import GridVector, Seed, achieved_ratio, as_rng, spectral_norm
from .errors import DomainError, FormatError

PRECISION_BITS = 40

KEY_MAGIC = b"CHVK"
DIGEST_MAGIC = b"CHVD"
FORMAT_VERSION = 1
# n, m, B, kappa, seed, stream_id, precision bits
_KEY_HEADER = struct.Struct("<IIIdQQI")


class CompressionWarning(UserWarning):
    """The parameters do not guarantee that the hash halves the domain."""


def _gamma(m, kappa):
    return kappa / (2 * math.sqrt(m))


def _r_ball(n, m, bound_b):
    return 4 * bound_b * n / math.sqrt(m)


def compression_margin(n: int, m: int, bound_b: int, kappa: float) -> float:
    """log2 (B+1)^n - log2 [2 (B n sqrt(128 pi e)/(kappa sqrt m) + sqrt(2 pi e)/2)^m].

    Positive means the domain is at least twice the size of the bound on the range.
    """
    if min(n, m, bound_b) < 1 or not kappa > 0:
        raise DomainError("n, m, B and kappa must be positive")
    s = math.sqrt(2 * math.pi * math.e)
    per_coord = bound_b * n * math.sqrt(128 * math.pi * math.e) / (kappa * math.sqrt(m)) + s / 2
    return n * math.log2(bound_b + 1) - 1 - m * math.log2(per_coord)


@dataclass(frozen=True)
class DistortionReport:
    alpha: float
    beta: float
    xi: float

    @classmethod
    def from_params(cls, n: int, m: int, kappa: float) -> "DistortionReport":
        alpha = 4 * math.sqrt(n / m)
        beta = kappa / 2
        return cls(alpha, beta, alpha / beta)


@dataclass(frozen=True, eq=False)
class HashKey:
    """Immutable hash key. ``a_int`` holds A * 2^precision exactly."""

    a_int: np.ndarray = field(repr=False)
    n: int
    m: int
    bound_b: int
    kappa: float
    seed: int = 0
    stream_id: int = 0
    entry_precision_bits: int = PRECISION_BITS

    def __post_init__(self):
        a = np.array(self.a_int, dtype=np.int64)
        if a.shape != (self.m, self.n):
            raise DomainError(f"key matrix must be {self.m}x{self.n}")
        if not 1 <= self.m < self.n:
            raise DomainError("need 1 <= m < n")
        if self.bound_b < 1 or not self.kappa > 0:
            raise DomainError("B and kappa must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "a_int", a)

    @property
    def a_scaled(self) -> np.ndarray:
        """A with entries ~ N(0, 1/m), quantized."""
        return np.ldexp(self.a_int.astype(np.float64), -self.entry_precision_bits)

    @property
    def chv_instance_matrix(self) -> np.ndarray:
        """sqrt(m) A, the unscaled CHV instance the hash is built on."""
        return math.sqrt(self.m) * self.a_scaled

    @property
    def gamma(self) -> float:
        return _gamma(self.m, self.kappa)

    @property
    def r_ball(self) -> float:
        return _r_ball(self.n, self.m, self.bound_b)

    @property
    def distortion(self) -> DistortionReport:
        return DistortionReport.from_params(self.n, self.m, self.kappa)

    def __eq__(self, other):
        return isinstance(other, HashKey) and serialize_key(self) == serialize_key(other)

    __hash__ = None


def keygen(n: int, m: int, bound_b: int, kappa: float, seed=0) -> HashKey:
    """Sample A ~ N(0, 1/m)^{m x n} and round entries to 40 fractional bits."""
    s = seed if isinstance(seed, Seed) else Seed(int(seed))
    if not 1 <= m < n:
        raise DomainError("need 1 <= m < n")
    margin = compression_margin(n, m, bound_b, kappa)
    if margin <= 0:
        warnings.warn(f"compression margin {margin:.3g} bits is not positive", CompressionWarning, stacklevel=2)
    g = s.rng().standard_normal((m, n)) / math.sqrt(m)
    a_int = np.rint(np.ldexp(g, PRECISION_BITS)).astype(np.int64)
    return HashKey(a_int, n, m, int(bound_b), float(kappa), s.seed, s.stream_id, PRECISION_BITS)


@dataclass(frozen=True, eq=False)
class HashDigest:
    q: np.ndarray
    is_overflow_zero: bool = False

    def point(self, gamma: float) -> np.ndarray:
        return gamma * self.q.astype(np.float64)

    def __eq__(self, other):
        return (isinstance(other, HashDigest) and self.is_overflow_zero == other.is_overflow_zero
                and np.array_equal(self.q, other.q))

    __hash__ = None


def check_domain_point(key: HashKey, x) -> np.ndarray:
    """Validate x in ([0, B] cap Z)^n and return it as int64."""
    arr = np.asarray(x)
    if arr.shape != (key.n,):
        raise DomainError(f"input must have length {key.n}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise DomainError("input entries must be integers")
    elif arr.dtype.kind not in "iub":
        raise DomainError("input entries must be integers")
    xi = arr.astype(np.int64)
    if np.any(xi < 0) or np.any(xi > key.bound_b):
        raise DomainError(f"input entries must lie in [0, {key.bound_b}]")
    return xi


def _exact_matvec(a_int, x):
    # exact integer A x * 2^p, switching to Python ints when int64 could overflow
    worst = int(np.abs(a_int).max(initial=0)) * int(np.abs(x).max(initial=0)) * x.shape[0]
    if worst < 2**62:
        return [int(v) for v in a_int @ x]
    xs = [int(v) for v in x]
    return [sum(int(a) * b for a, b in zip(row, xs)) for row in a_int]


def hash_point(key: HashKey, x) -> HashDigest:
    """q = floor(A x / gamma) coordinate-wise (toward -inf), exactly.

    If ||gamma q|| exceeds r_ball the digest is zero with the overflow flag set.
    """
    xi = check_domain_point(key, x)
    num, den = key.gamma.as_integer_ratio()
    scale = num << key.entry_precision_bits
    # A x / gamma = S / 2^p * den / num
    q = np.array([(s * den) // scale for s in _exact_matvec(key.a_int, xi)], dtype=np.int64)
    if float(np.linalg.norm(key.gamma * q.astype(np.float64))) > key.r_ball:
        return HashDigest(np.zeros(key.m, dtype=np.int64), True)
    return HashDigest(q, False)


def exact_residual(key: HashKey, x, digest: HashDigest) -> np.ndarray:
    """A x - gamma q, via exact rationals rounded once to float."""
    xi = check_domain_point(key, x)
    g = Fraction(key.gamma)
    p = 2 ** key.entry_precision_bits
    return np.array([float(Fraction(s, p) - g * int(qi))
                     for s, qi in zip(_exact_matvec(key.a_int, xi), digest.q)])


def digest_distance(key: HashKey, d1: HashDigest, d2: HashDigest) -> float:
    return float(key.gamma * np.linalg.norm((d1.q - d2.q).astype(np.float64)))


# ---------------------------------------------------------------- reduction


@dataclass(frozen=True)
class ReductionResult:
    """Outcome of feeding a candidate pair (y, z) to the reduction.

    ``violating`` says whether the pair contracts; ``x`` is y - z and
    ``verified`` whether it satisfies ||sqrt(m) A x|| < kappa sqrt(m) ||x||.
    """

    violating: bool
    x: GridVector
    hash_distance: float
    input_distance: float
    ratio: float
    verified: bool
    overflowed: bool

    @property
    def is_chv_solution(self) -> bool:
        return self.violating and self.verified


def reduce_contraction_to_chv(key: HashKey, y, z) -> ReductionResult:
    """Turn a contracting pair for the hash into a CHV solution x = y - z.

    A pair contracts when ||hash(y) - hash(z)|| < (kappa/2) ||y - z||. Then
    ||A x|| < (kappa/2)||x|| + gamma sqrt(m) <= kappa ||x||, so multiplying by
    sqrt(m) gives the CHV inequality for sqrt(m) A. Non-contracting pairs
    come back with ``violating = False``.
    """
    yi = check_domain_point(key, y)
    zi = check_domain_point(key, z)
    if np.array_equal(yi, zi):
        raise DomainError("y and z must differ")
    hy = hash_point(key, yi)
    hz = hash_point(key, zi)
    x = yi - zi
    hd = digest_distance(key, hy, hz)
    xd = float(np.linalg.norm(x.astype(np.float64)))
    ratio = achieved_ratio(key.chv_instance_matrix, x)
    return ReductionResult(
        violating=hd < key.kappa / 2 * xd,
        x=x,
        hash_distance=hd,
        input_distance=xd,
        ratio=ratio,
        verified=ratio < key.kappa,
        overflowed=hy.is_overflow_zero or hz.is_overflow_zero,
    )


def split_signed(x) -> tuple[np.ndarray, np.ndarray]:
    """Write x in [-B, B]^n as y - z with y, z in [0, B]^n and disjoint supports."""
    x = np.asarray(x, dtype=np.int64)
    return np.maximum(x, 0), np.maximum(-x, 0)


# ---------------------------------------------------------------- non-expansion


@dataclass(frozen=True)
class NonExpansionReport:
    max_ratio: float
    spectral_norm: float
    certificate_bound: float
    pairs: int

    @property
    def violated(self) -> bool:
        """The spectral certificate ||A|| <= 3 sqrt(n/m) failed."""
        return self.spectral_norm > self.certificate_bound


def check_non_expansion(key: HashKey, trials: int = 100, seed=0) -> NonExpansionReport:
    """Sample random domain pairs and compare with the spectral certificate.

    When ||A|| <= 3 sqrt(n/m), every pair satisfies ||hash(y) - hash(z)|| <=
    (3 sqrt(n/m) + kappa/2) ||y - z||. Identical pairs are skipped.
    """
    rng = as_rng(seed)
    sn = spectral_norm(key.a_scaled)
    worst = 0.0
    used = 0
    for _ in range(trials):
        y = rng.integers(0, key.bound_b + 1, size=key.n)
        z = rng.integers(0, key.bound_b + 1, size=key.n)
        if np.array_equal(y, z):
            continue
        d = digest_distance(key, hash_point(key, y), hash_point(key, z))
        worst = max(worst, d / float(np.linalg.norm((y - z).astype(np.float64))))
        used += 1
    return NonExpansionReport(worst, sn, 3 * math.sqrt(key.n / key.m), used)


# ---------------------------------------------------------------- serialization


def _zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def _unzigzag(u: int) -> int:
    return u // 2 if u % 2 == 0 else -(u + 1) // 2


def _put_varint(out: bytearray, u: int):
    while True:
        byte = u & 0x7F
        u >>= 7
        if u:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _get_varint(buf: bytes, pos: int) -> tuple[int, int]:
    u = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise FormatError("truncated varint")
        byte = buf[pos]
        pos += 1
        u |= (byte & 0x7F) << shift
        if not byte & 0x80:
            if byte == 0 and shift:
                raise FormatError("non-canonical varint")
            return u, pos
        shift += 7
        if shift > 70:
            raise FormatError("varint too long")


def _check_magic(buf: bytes, magic: bytes):
    if len(buf) < len(magic) + 1:
        raise FormatError("truncated header")
    if buf[: len(magic)] != magic:
        raise FormatError(f"bad magic {buf[:len(magic)]!r}, expected {magic!r}")
    if buf[len(magic)] != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {buf[len(magic)]}")
    return len(magic) + 1


def serialize_key(key: HashKey) -> bytes:
    """magic, version, header (n, m, B, kappa, seed, stream, precision), float64 LE row-major A."""
    head = _KEY_HEADER.pack(key.n, key.m, key.bound_b, key.kappa, key.seed, key.stream_id,
                            key.entry_precision_bits)
    body = key.a_scaled.astype("<f8").tobytes(order="C")
    return KEY_MAGIC + bytes([FORMAT_VERSION]) + head + body


def deserialize_key(buf: bytes) -> HashKey:
    pos = _check_magic(buf, KEY_MAGIC)
    if len(buf) < pos + _KEY_HEADER.size:
        raise FormatError("truncated key header")
    n, m, bound_b, kappa, seed, stream, prec = _KEY_HEADER.unpack_from(buf, pos)
    pos += _KEY_HEADER.size
    want = 8 * m * n
    if len(buf) != pos + want:
        raise FormatError(f"key payload has {len(buf) - pos} bytes, expected {want}")
    a = np.frombuffer(buf, dtype="<f8", count=m * n, offset=pos).reshape(m, n)
    scaled = np.ldexp(a, prec)
    if not np.all(scaled == np.rint(scaled)):
        raise FormatError(f"key entries are not multiples of 2^-{prec}")
    return HashKey(scaled.astype(np.int64), n, m, bound_b, kappa, seed, stream, prec)


def serialize_digest(d: HashDigest) -> bytes:
    """magic, version, overflow flag, varint m, zigzag varints of q."""
    out = bytearray(DIGEST_MAGIC + bytes([FORMAT_VERSION, int(bool(d.is_overflow_zero))]))
    _put_varint(out, int(d.q.shape[0]))
    for v in d.q:
        _put_varint(out, _zigzag(int(v)))
    return bytes(out)


def deserialize_digest(buf: bytes) -> HashDigest:
    pos = _check_magic(buf, DIGEST_MAGIC)
    if pos >= len(buf):
        raise FormatError("truncated digest header")
    flag = buf[pos]
    if flag > 1:
        raise FormatError(f"bad overflow flag {flag}")
    m, pos = _get_varint(buf, pos + 1)
    q = []
    for _ in range(m):
        u, pos = _get_varint(buf, pos)
        q.append(_unzigzag(u))
    if pos != len(buf):
        raise FormatError("trailing bytes after digest")
    return HashDigest(np.array(q, dtype=np.int64), bool(flag))
