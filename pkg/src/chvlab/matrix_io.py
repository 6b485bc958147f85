"""Binary matrix files.

Layout (little-endian)::

    0   4  magic b"CHVM"
    4   1  version (1)
    5   1  flag: 0 = external data, 1 = generated from a seed
    6   2  reserved, zero
    8   4  m (u32)
    12  4  n (u32)
    16  .  m*n float64, row-major

So a 2x2 matrix takes 16 header bytes plus 32 payload bytes.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"CHVM"
VERSION = 1
FLAG_EXTERNAL = 0
FLAG_SEEDED = 1
_HEADER = struct.Struct("<4sBBHII")
HEADER_SIZE = _HEADER.size


def encode_matrix(a, flag: int = FLAG_EXTERNAL) -> bytes:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise FormatError("only 2-D matrices can be stored")
    if flag not in (FLAG_EXTERNAL, FLAG_SEEDED):
        raise FormatError(f"unknown flag {flag}")
    m, n = a.shape
    return _HEADER.pack(MAGIC, VERSION, flag, 0, m, n) + a.astype("<f8").tobytes(order="C")


def write_matrix(path, a, flag: int = FLAG_EXTERNAL):
    with open(path, "wb") as fh:
        fh.write(encode_matrix(a, flag))


def _parse_header(head: bytes, total: int):
    if len(head) < HEADER_SIZE:
        raise FormatError(f"truncated header: {len(head)} of {HEADER_SIZE} bytes")
    magic, version, flag, _, m, n = _HEADER.unpack_from(head)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if flag not in (FLAG_EXTERNAL, FLAG_SEEDED):
        raise FormatError(f"unknown flag {flag}")
    want = HEADER_SIZE + 8 * m * n
    if total != want:
        kind = "truncated" if total < want else "oversized"
        raise FormatError(f"{kind} matrix file: {total} bytes, expected {want} for {m}x{n}")
    return m, n, flag


def decode_matrix(buf: bytes) -> tuple[np.ndarray, int]:
    """Return (matrix, flag)."""
    m, n, flag = _parse_header(buf[:HEADER_SIZE], len(buf))
    a = np.frombuffer(buf, dtype="<f8", count=m * n, offset=HEADER_SIZE).reshape(m, n)
    return a.astype(np.float64), flag


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_matrix(fh.read())[0]


def read_header(path) -> tuple[int, int, int]:
    """(m, n, flag), after validating the file length."""
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    return _parse_header(head, os.path.getsize(path))


def iter_columns(path):
    """Yield the columns of a stored matrix one at a time, via a memory map.

    Row-major storage makes each column a strided view, so the whole
    matrix is never loaded.
    """
    m, n, _ = read_header(path)
    if m * n == 0:
        return
    mm = np.memmap(path, dtype="<f8", mode="r", offset=HEADER_SIZE, shape=(m, n))
    for j in range(n):
        yield np.array(mm[:, j], dtype=np.float64)
