import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chvlab.core import ChvInstance, Seed
from chvlab.errors import DomainError, FormatError
from chvlab.kernel import KernelConfig, kernel_round
from chvlab.lsh import (CompressionWarning, DistortionReport, HashDigest, check_non_expansion,
                        compression_margin, deserialize_digest, deserialize_key, digest_distance,
                        exact_residual, hash_point, keygen, reduce_contraction_to_chv,
                        serialize_digest, serialize_key, split_signed)


@pytest.fixture(scope="module")
def key():
    return keygen(512, 32, 16, 0.5, 1)


def test_key_parameters(key):
    assert key.gamma == 0.5 / (2 * math.sqrt(32))
    assert key.r_ball == 4 * 16 * 512 / math.sqrt(32)
    assert np.all(np.ldexp(key.a_scaled, 40) == key.a_int)


def test_entry_variance():
    k = keygen(4000, 40, 1, 0.5, 2)
    assert abs(k.a_scaled.var() * 40 - 1) < 0.05


def test_key_determinism():
    assert serialize_key(keygen(64, 8, 3, 0.5, 9)) == serialize_key(keygen(64, 8, 3, 0.5, 9))
    assert serialize_key(keygen(64, 8, 3, 0.5, 9)) != serialize_key(keygen(64, 8, 3, 0.5, 10))


def test_compression_margin():
    assert compression_margin(256, 32, 255, 0.05) > 0
    assert compression_margin(100, 99, 1, 1e-6) < 0
    vals = [compression_margin(n, 32, 255, 0.05) for n in range(33, 400, 7)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.warns(CompressionWarning):
        keygen(20, 19, 1, 1e-6, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        keygen(256, 32, 255, 0.05, 0)


def test_distortion():
    d = DistortionReport.from_params(512, 32, 0.5)
    assert d.alpha == 4 * math.sqrt(16) and d.beta == 0.25
    assert d.xi == pytest.approx(8 * math.sqrt(512 / 32) / 0.5, rel=1e-12)


def test_hash_zero_and_determinism(key):
    d = hash_point(key, np.zeros(512, dtype=int))
    assert not d.is_overflow_zero and not d.q.any()
    x = np.random.default_rng(0).integers(0, 17, 512)
    assert hash_point(key, x) == hash_point(key, x)


def test_hash_residual(key):
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.integers(0, 17, 512)
        d = hash_point(key, x)
        assert not d.is_overflow_zero
        r = exact_residual(key, x, d)
        assert np.all(r >= 0) and np.all(r < key.gamma)
        assert np.linalg.norm(r) <= key.gamma * math.sqrt(key.m)
        assert np.linalg.norm(d.point(key.gamma)) <= key.r_ball


def test_hash_floor_negative_coordinates():
    k = keygen(100, 2, 1, 0.5, 3)
    x = np.ones(100, dtype=int)
    d = hash_point(k, x)
    ax = k.a_scaled @ x
    assert np.array_equal(d.q, np.floor(ax / k.gamma).astype(np.int64))
    assert (ax < 0).any()


def test_hash_domain_errors(key):
    with pytest.raises(DomainError):
        hash_point(key, -np.ones(512, dtype=int))
    with pytest.raises(DomainError):
        hash_point(key, np.full(512, 17))
    with pytest.raises(DomainError):
        hash_point(key, np.full(512, 0.5))
    with pytest.raises(DomainError):
        hash_point(key, np.zeros(10, dtype=int))


def test_overflow_flag():
    k = keygen(64, 8, 4, 0.5, 4)
    tiny = type(k)(k.a_int * 10**6, k.n, k.m, k.bound_b, k.kappa)
    d = hash_point(tiny, np.full(64, 4))
    assert d.is_overflow_zero and not d.q.any()
    assert d != HashDigest(np.zeros(8, dtype=np.int64), False)


def test_no_overflow_in_practice():
    over = 0
    for s in range(200):
        k = keygen(64, 8, 4, 0.5, s)
        rng = np.random.default_rng(s)
        for _ in range(50):
            over += hash_point(k, rng.integers(0, 5, 64)).is_overflow_zero
    assert over == 0


def test_reduction_soundness(key):
    inst = ChvInstance.from_matrix(key.chv_instance_matrix, key.bound_b, key.kappa)
    for s in range(20):
        x = kernel_round(inst, KernelConfig(16), Seed(s, 1))
        res = reduce_contraction_to_chv(key, *split_signed(x))
        assert res.violating and res.verified and res.is_chv_solution
        assert np.array_equal(res.x, x)
        assert res.ratio < key.kappa


def test_reduction_errors_and_non_violation(key):
    y = np.random.default_rng(2).integers(0, 17, 512)
    with pytest.raises(DomainError):
        reduce_contraction_to_chv(key, y, y)
    z = np.random.default_rng(3).integers(0, 17, 512)
    res = reduce_contraction_to_chv(key, y, z)
    assert not res.violating and not res.is_chv_solution


def test_soundness_implication_random_pairs():
    # every violating pair found among near-duplicates must verify
    k = keygen(40, 4, 2, 0.9, 5)
    rng = np.random.default_rng(6)
    seen = 0
    for _ in range(3000):
        y = rng.integers(0, 3, 40)
        z = y.copy()
        idx = rng.integers(0, 40, size=2)
        z[idx] = rng.integers(0, 3, size=2)
        if np.array_equal(y, z):
            continue
        res = reduce_contraction_to_chv(k, y, z)
        if res.violating:
            seen += 1
            assert res.verified
    assert seen > 0


def test_non_expansion(key):
    rep = check_non_expansion(key, 200, 0)
    assert not rep.violated
    assert rep.max_ratio <= 4 * math.sqrt(key.n / key.m)
    assert rep.pairs == 200


def test_non_expansion_skips_equal_pairs():
    with pytest.warns(CompressionWarning):
        k = keygen(2, 1, 1, 0.5, 0)
    assert check_non_expansion(k, 200, 0).pairs < 200


def test_key_roundtrip():
    for s in range(100):
        k = keygen(200 + s % 7, 5, 3, 0.3, s)
        blob = serialize_key(k)
        k2 = deserialize_key(blob)
        assert k2 == k and np.array_equal(k2.a_int, k.a_int)
        assert serialize_key(k2) == blob


def test_key_format_errors():
    blob = serialize_key(keygen(200, 5, 3, 0.3, 1))
    with pytest.raises(FormatError):
        deserialize_key(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        deserialize_key(blob[:4] + b"\x09" + blob[5:])
    with pytest.raises(FormatError):
        deserialize_key(blob[:-1])
    with pytest.raises(FormatError):
        deserialize_key(blob[:10])


def test_digest_zero_layout():
    d = hash_point(keygen(200, 5, 3, 0.3, 1), np.zeros(200, dtype=int))
    assert serialize_digest(d) == b"CHVD\x01\x00\x05" + b"\x00" * 5


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-2**40, 2**40), min_size=1, max_size=40), st.booleans())
def test_digest_roundtrip(q, flag):
    d = HashDigest(np.array(q, dtype=np.int64), flag)
    assert deserialize_digest(serialize_digest(d)) == d


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-300, 300), min_size=3, max_size=3),
       st.lists(st.integers(-300, 300), min_size=3, max_size=3))
def test_digest_canonical(q1, q2):
    d1, d2 = HashDigest(np.array(q1)), HashDigest(np.array(q2))
    assert (d1 == d2) == (serialize_digest(d1) == serialize_digest(d2))


def test_digest_format_errors():
    blob = serialize_digest(HashDigest(np.array([1, -300, 7])))
    for bad in (blob[:-1], blob + b"\x00", b"CHVK" + blob[4:], blob[:4] + b"\x02" + blob[5:],
                blob[:5] + b"\x07" + blob[6:], b"CHVD\x01\x00\x01\x80\x00"):
        with pytest.raises(FormatError):
            deserialize_digest(bad)


def test_digest_distance(key):
    d1 = HashDigest(np.array([3, 4] + [0] * 30))
    d2 = HashDigest(np.zeros(32, dtype=np.int64))
    assert digest_distance(key, d1, d2) == pytest.approx(5 * key.gamma)
