import io
import math

import numpy as np
import pytest

from chvlab.errors import DomainError, EnumerationTooLargeError
from chvlab.theory import (OverlapMatrix, ball_count_bound_check, covering_check, covering_sweep,
                           determinant_bound_check, determinant_sweep, grid_ball_count_bound_check,
                           run_theory_checks, sample_cone, write_report)


def test_determinant_examples():
    e = np.full((3, 3), 0.5)
    np.fill_diagonal(e, 1.0)
    c = determinant_bound_check(OverlapMatrix(e, 0.5))
    assert c.det == pytest.approx(0.5) and c.bound == pytest.approx(0.109375) and c.holds
    c = determinant_bound_check(OverlapMatrix(np.array([[1, 0.7], [0.7, 1]]), 0.4))
    assert c.det == pytest.approx(0.51) and c.bound == pytest.approx(0.28) and c.holds and c.psd


def test_overlap_validation():
    with pytest.raises(DomainError):
        OverlapMatrix(np.array([[1, 0.9], [0.9, 1]]), 0.4)
    with pytest.raises(DomainError):
        OverlapMatrix(np.array([[1.1, 0.7], [0.7, 1]]), 0.4)
    with pytest.raises(DomainError):
        OverlapMatrix(np.array([[1, 0.7], [0.65, 1]]), 0.4)
    with pytest.raises(DomainError):
        OverlapMatrix(np.ones((1, 1)), 0.4)
    m = OverlapMatrix.random(5, 0.3, 1)
    assert determinant_bound_check(m).holds


def test_determinant_sweep():
    for r in range(2, 9):
        for beta in (0.1, 0.3, 0.5):
            det, bound, eig, bad = determinant_sweep(r, beta, 10_000, r)
            assert bad == 0 and det >= bound * (1 - 1e-9) and eig >= -1e-9


def test_covering_examples():
    c = covering_check(0.3, [1.0, 0.0], [1.0, 0.0])
    assert c.index == 0 and c.distance == 0 and c.holds
    c = covering_check(0.5, [1.0, 0.0], [2.0, 0.0])
    assert c.index == 1 and c.distance == pytest.approx(0.5) and c.radius == pytest.approx(math.sqrt(5) * 0.75)
    with pytest.raises(DomainError):
        covering_check(0.1, [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        covering_check(0.1, [1.0, 0.0], [-1.0, 0.0])
    with pytest.raises(DomainError):
        covering_check(0.1, [2.0, 0.0], [1.0, 0.0])


def test_covering_exact_powers():
    # <x, x0> exactly (1+t)^k must land on index k despite rounding in the log
    for t in (0.1, 0.25, 0.5, 1.0):
        for k in range(-20, 21):
            c = covering_check(t, [0.0, 1.0], [0.0, (1 + t) ** k])
            assert c.index == k and c.holds


def test_covering_sweep():
    worst, bad = covering_sweep(100_000, 20, 3)
    assert bad == 0 and worst <= 1


def test_cone_sampler_inside():
    rng = np.random.default_rng(0)
    x0 = np.array([0.6, 0.8, 0.0])
    for x in sample_cone(0.2, x0, 500, rng):
        p = x @ x0
        assert p > 0 and np.linalg.norm(x - p * x0) <= 0.2 * p * (1 + 1e-12)


def test_ball_count_examples():
    c = ball_count_bound_check(2, 0.5)
    assert c.exact == 5 and c.bound == pytest.approx(18.0) and c.holds
    c = ball_count_bound_check(1, 0.25)
    assert c.exact == 1 and c.bound == pytest.approx(4**0.25 * 5 / 3) and c.holds
    with pytest.raises(DomainError):
        ball_count_bound_check(9, 0.3)
    with pytest.raises(DomainError):
        ball_count_bound_check(3, 0.6)


def test_ball_count_sweep():
    for n in range(2, 7):
        for rho in np.linspace(0.1, 0.5, 9):
            assert ball_count_bound_check(n, float(rho)).holds


def test_grid_ball_examples():
    c = grid_ball_count_bound_check(1, 1.0, 1.0)
    assert c.exact == 3 and c.bound == pytest.approx(6.1991, abs=1e-3)
    c = grid_ball_count_bound_check(2, 2.0, 1.0)
    assert c.exact == 13 and c.bound == pytest.approx(62.58, abs=0.01)
    with pytest.raises(EnumerationTooLargeError):
        grid_ball_count_bound_check(6, 100.0, 1.0)
    with pytest.raises(DomainError):
        grid_ball_count_bound_check(2, -1.0, 1.0)


def test_grid_ball_random():
    rng = np.random.default_rng(4)
    for _ in range(500):
        m = int(rng.integers(1, 5))
        gamma = float(rng.uniform(0.1, 2))
        assert grid_ball_count_bound_check(m, float(rng.uniform(0.01, 5)) * gamma, gamma).holds


def test_report():
    rows = run_theory_checks(500, 1)
    assert all(r.holds for r in rows)
    buf = io.StringIO()
    write_report(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "claim,params,exact,bound,holds"
    assert len(lines) == len(rows) + 1
