import itertools
import math

import numpy as np
import pytest

from chvlab import _kernels
from chvlab.core import ChvInstance, Seed, achieved_ratio, exact_ratio
from chvlab.errors import DomainError, EnumerationTooLargeError
from chvlab.oracle import brute_force_best, count_solutions, read_golden
from chvlab.special import chi2_cdf


def reference(inst, kappa):
    # plain itertools enumeration, independent of the kernels
    best, best_r, count = None, math.inf, 0
    b = inst.bound_b
    for x in itertools.product(range(-b, b + 1), repeat=inst.n):
        if not any(x):
            continue
        r = achieved_ratio(inst.a, np.array(x))
        count += r < kappa
        if next(v for v in x if v) > 0 and r < best_r:
            best, best_r = np.array(x), r
    return best, best_r, count


def test_hand_examples():
    res = brute_force_best(ChvInstance.from_matrix([[1.0, 1.0]], 1, 0.5))
    assert list(res.best_x) == [1, -1] and res.best_ratio == 0.0
    assert res.solution_count_at == (0.5, 2)
    res = brute_force_best(ChvInstance.from_matrix([[1.0, 2.0]], 1, 0.5))
    assert list(res.best_x) == [1, -1]
    assert res.best_ratio == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_golden(fixtures_dir):
    for row in read_golden(fixtures_dir / "oracle_golden.csv"):
        inst = ChvInstance.sample(row["n"], row["m"], row["B"], row["kappa"], Seed(row["seed"], row["stream_id"]))
        res = brute_force_best(inst)
        assert np.array_equal(res.best_x, row["best_x"])
        assert res.best_ratio == pytest.approx(row["best_ratio"], abs=1e-12)
        assert res.solution_count_at[1] == row["count"]


@pytest.mark.parametrize("seed", range(6))
def test_matches_reference(seed):
    inst = ChvInstance.sample(6, 2, 2 if seed % 2 else 1, 0.3, Seed(seed, 3))
    best, best_r, count = reference(inst, 0.3)
    res = brute_force_best(inst)
    assert np.array_equal(res.best_x, best)
    assert res.best_ratio == pytest.approx(best_r, abs=1e-12)
    assert res.best_ratio == pytest.approx(exact_ratio(inst, res.best_x), abs=1e-12)
    assert res.solution_count_at[1] == count


def test_numba_and_numpy_agree():
    for s in range(10):
        inst = ChvInstance.sample(9, 3, 1 + s % 2, 0.4, Seed(s, 7))
        args = (inst.a, inst.bound_b, 0.4**2 * 3)
        bx1, r1, c1 = _kernels.enumerate_grid_numba(*args)
        bx2, r2, c2 = _kernels.enumerate_grid_numpy(*args)
        assert np.array_equal(bx1, bx2) and c1 == c2
        assert r1 == pytest.approx(r2, rel=1e-10)


def test_count_limits_and_symmetry():
    inst = ChvInstance.sample(8, 2, 1, 0.5, Seed(1))
    assert count_solutions(inst, 1e-15) == 0
    assert count_solutions(inst, 100.0) == 3**8 - 1
    prev = 0
    for k in np.linspace(0.01, 1.5, 25):
        c = count_solutions(inst, float(k))
        assert c % 2 == 0 and c >= prev
        prev = c
    with pytest.raises(DomainError):
        count_solutions(inst, 0.0)


def test_count_monotone_in_b():
    a = ChvInstance.sample(6, 2, 1, 0.3, Seed(2)).a
    counts = [count_solutions(ChvInstance.from_matrix(a, b, 0.3)) for b in (1, 2, 3)]
    assert counts == sorted(counts)


def test_best_vs_count_consistency():
    for s in range(20):
        inst = ChvInstance.sample(8, 2, 1, 0.05, Seed(s, 11))
        res = brute_force_best(inst)
        assert (res.best_ratio < inst.kappa) == (res.solution_count_at[1] >= 1)


def test_guard():
    inst = ChvInstance.sample(18, 2, 1, 0.5, Seed(0))
    with pytest.raises(EnumerationTooLargeError):
        brute_force_best(inst)


def test_mean_count_matches_formula():
    n, m, b, kappa = 8, 2, 1, 0.3
    counts = [count_solutions(ChvInstance.sample(n, m, b, kappa, Seed(s, 0))) for s in range(500)]
    expected = (3**n - 1) * chi2_cdf(m, kappa**2 * m)
    se = np.std(counts, ddof=1) / math.sqrt(len(counts))
    assert abs(np.mean(counts) - expected) <= 3 * se
