import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chvlab.core import ChvInstance, Seed, achieved_ratio, sample_gaussian_matrix
from chvlab.errors import DomainError, RetryExhaustedError
from chvlab.kernel import (KernelConfig, kernel_round, kernel_round_details, round_clamp,
                           rounding_residual, rounding_residual_stats)
from chvlab.special import ln_plus


def test_round_clamp_examples():
    assert round_clamp(2.4, 3) == 2
    assert round_clamp(-7.1, 3) == -3
    assert round_clamp(2.5, 3) == 2
    assert round_clamp(3.5, 3) == 3
    assert round_clamp(-0.5, 3) == 0
    assert np.array_equal(round_clamp(np.array([1.5, -9.0, 0.2]), 2), [2, -2, 0])


@given(st.floats(-1e6, 1e6, allow_nan=False), st.integers(1, 1000))
def test_round_clamp_range(v, b):
    z = round_clamp(v, b)
    assert isinstance(z, int) and -b <= z <= b
    if abs(v) <= b:
        assert abs(v - z) <= 0.5


def test_config():
    with pytest.raises(DomainError):
        KernelConfig(4, 1)
    with pytest.raises(DomainError):
        KernelConfig(0, 2)
    assert KernelConfig(16, 2).scale == pytest.approx(16 / math.sqrt(8 * math.log(16)))
    assert KernelConfig(2, 2).scale == pytest.approx(2 / math.sqrt(8))


def test_prerounding_in_kernel():
    inst = ChvInstance.sample(300, 20, 8, 0.5, Seed(1))
    for s in range(20):
        r = kernel_round_details(inst, KernelConfig(8), Seed(s, 1))
        assert np.linalg.norm(inst.a @ r.x) <= 1e-8 * np.linalg.norm(inst.a, 2) * np.linalg.norm(r.x)
        assert np.array_equal(r.z, round_clamp(r.x, 8))
        assert r.z.any()


def test_determinism():
    inst = ChvInstance.sample(100, 10, 4, 0.5, Seed(2))
    z1 = kernel_round(inst, KernelConfig(4), Seed(3))
    z2 = kernel_round(inst, KernelConfig(4), Seed(3))
    assert np.array_equal(z1, z2)


def test_marginal_variance():
    # fresh A per run so the coordinate's marginal is the unconditional one
    n, m, b, k = 64, 8, 16, 2
    runs = 100_000
    vals = np.empty(runs)
    for i in range(runs):
        inst = ChvInstance.sample(n, m, b, 0.5, Seed(i, 0))
        vals[i] = kernel_round_details(inst, KernelConfig(b, k), Seed(i, 1)).x[0]
    target = b * b / (4 * k * ln_plus(b))
    assert abs(vals.var() / target - 1) <= 0.03


def test_sign_equivariance():
    n, m, b = 200, 10, 8
    inst = ChvInstance.sample(n, m, b, 0.5, Seed(4))
    signs = np.where(np.random.default_rng(0).random(n) < 0.5, -1.0, 1.0)
    flipped = ChvInstance.from_matrix(inst.a * signs, b, 0.5)
    g = np.random.default_rng(1).standard_normal(n)
    z = kernel_round(inst, KernelConfig(b), Seed(5), direction=g)
    zf = kernel_round(flipped, KernelConfig(b), Seed(5), direction=signs * g)
    assert np.array_equal(zf, (signs * z).astype(np.int64))


def test_zero_output_exhausts_retries():
    # a direction along which every coordinate rounds to zero
    inst = ChvInstance.from_matrix(np.eye(2, 1000, k=998), 1, 0.5)
    g = np.zeros(1000)
    g[:998] = 1.0
    with pytest.raises(RetryExhaustedError):
        kernel_round(inst, KernelConfig(1), Seed(0), direction=g)


def test_output_norm_lower_bound():
    n, m, b, k = 500, 20, 16, 2
    inst = ChvInstance.sample(n, m, b, 0.5, Seed(6))
    floor = b * math.sqrt(n) / math.sqrt(k * ln_plus(b)) / 20
    ok = sum(np.linalg.norm(kernel_round(inst, KernelConfig(b, k), Seed(s))) >= floor for s in range(300))
    assert ok >= 297


def test_conditional_normality():
    n, m, b = 400, 10, 4
    inst = ChvInstance.sample(n, m, b, 0.5, Seed(7))
    r = kernel_round_details(inst, KernelConfig(b), Seed(8))
    x, z = r.x, r.z.astype(np.float64)
    resid = rounding_residual(x, b)
    rng = np.random.default_rng(9)
    g = rng.standard_normal((10_000, n))
    rows = g - np.outer(g @ x, x) / (x @ x)  # rows conditioned on a . x = 0
    vals = rows @ z
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean()) <= 4 * se
    assert vals.var() <= 1.05 * (resid @ resid)


def test_residual_stats():
    st_ = rounding_residual_stats(1_000_000, 2**20, 2, Seed(1))
    assert 0 <= st_.mean <= 0.26
    assert st_.tail(0.25) <= 1
    assert st_.cdf(0.25) == pytest.approx(1.0)
    assert rounding_residual_stats(5000, 4, 2, Seed(2)).mean >= 0
    with pytest.raises(DomainError):
        rounding_residual_stats(999, 4)


def test_median_ratio_band():
    n, m, b, k = 2000, 50, 16, 2
    ratios = []
    for s in range(50):
        inst = ChvInstance.sample(n, m, b, 0.5, Seed(s, 0))
        ratios.append(achieved_ratio(inst, kernel_round(inst, KernelConfig(b, k), Seed(s, 1))))
    assert np.median(ratios) <= 8 * math.sqrt(k * ln_plus(b)) / b


def test_degenerate_direction_is_retried():
    # solver stream equal to the instance stream draws g = first row of A
    inst = ChvInstance.sample(300, 20, 8, 0.5, Seed(1))
    r = kernel_round_details(inst, KernelConfig(8), Seed(1))
    assert r.attempts == 2
    assert np.linalg.norm(inst.a @ r.x) <= 1e-8 * np.linalg.norm(inst.a, 2) * np.linalg.norm(r.x)
    with pytest.raises(RetryExhaustedError):
        kernel_round(inst, KernelConfig(8), Seed(1), direction=inst.a[0])
