"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public modules call the un-suffixed dispatchers at the bottom; which
flavour they reach is decided once by :data:`chvlab._jit.USE_NUMBA`.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

# ---------------------------------------------------------------- online solver


@njit
def cool_run_numba(a, temps):
    m, n = a.shape
    x = np.empty(n, dtype=np.int64)
    y = np.zeros(m)
    ls = np.empty(n + 1)
    ls[0] = 0.0
    for t in range(n):
        b = temps[t]
        plus = 0.0
        minus = 0.0
        for i in range(m):
            ba = b * a[i, t]
            vp = y[i] + ba
            vm = y[i] - ba
            plus += vp * vp
            minus += vm * vm
        if plus <= minus:
            x[t] = b
            for i in range(m):
                y[i] += b * a[i, t]
            ls[t + 1] = math.sqrt(plus)
        else:
            x[t] = -b
            for i in range(m):
                y[i] -= b * a[i, t]
            ls[t + 1] = math.sqrt(minus)
    return x, y, ls


def cool_run_numpy(a, temps):
    m, n = a.shape
    cols = np.asfortranarray(a)
    x = np.empty(n, dtype=np.int64)
    y = np.zeros(m)
    ls = np.empty(n + 1)
    ls[0] = 0.0
    for t in range(n):
        b = int(temps[t])
        step = b * cols[:, t]
        yp = y + step
        ym = y - step
        plus = yp @ yp
        minus = ym @ ym
        if plus <= minus:
            x[t], y, ls[t + 1] = b, yp, math.sqrt(plus)
        else:
            x[t], y, ls[t + 1] = -b, ym, math.sqrt(minus)
    return x, y, ls


# ---------------------------------------------------------------- brute force

# every this-many fastest digits a carry triggers a fresh A x recomputation,
# which bounds drift from the incremental updates
_REFRESH_DEPTH = 3


@njit
def enumerate_grid_numba(a, bound_b, kappa_sq_m):
    """Walk ([-B, B] cap Z)^n in lexicographic order (last index fastest).

    Returns (best canonical x, its ||Ax||^2/||x||^2, number of nonzero x
    with ||Ax||^2 < kappa^2 m ||x||^2). Canonical means first nonzero entry
    positive; the count includes both signs.
    """
    m, n = a.shape
    x = np.full(n, -bound_b, dtype=np.int64)
    y = np.zeros(m)
    xsq = 0
    for j in range(n):
        xsq += bound_b * bound_b
        for i in range(m):
            y[i] -= bound_b * a[i, j]
    best = np.zeros(n, dtype=np.int64)
    best_r2 = np.inf
    count = 0
    radix = 2 * bound_b + 1
    total = radix**n
    for step in range(total):
        if xsq > 0:
            ysq = 0.0
            for i in range(m):
                ysq += y[i] * y[i]
            if ysq < kappa_sq_m * xsq:
                count += 1
            r2 = ysq / xsq
            if r2 < best_r2:
                k = 0
                while x[k] == 0:
                    k += 1
                if x[k] > 0:
                    best_r2 = r2
                    best[:] = x
        if step == total - 1:
            break
        j = n - 1
        while x[j] == bound_b:
            x[j] = -bound_b
            for i in range(m):
                y[i] -= 2 * bound_b * a[i, j]
            j -= 1
        old = x[j]
        x[j] = old + 1
        xsq += (old + 1) * (old + 1) - old * old
        if j < n - _REFRESH_DEPTH:
            for i in range(m):
                acc = 0.0
                for jj in range(n):
                    acc += a[i, jj] * x[jj]
                y[i] = acc
        else:
            for i in range(m):
                y[i] += a[i, j]
    return best, best_r2, count


def _grid_chunk(start, stop, n, bound_b):
    radix = 2 * bound_b + 1
    idx = np.arange(start, stop, dtype=np.int64)
    powers = radix ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % radix - bound_b


def enumerate_grid_numpy(a, bound_b, kappa_sq_m, chunk=1 << 15):
    m, n = a.shape
    total = (2 * bound_b + 1) ** n
    best = np.zeros(n, dtype=np.int64)
    best_r2 = np.inf
    count = 0
    for start in range(0, total, chunk):
        xs = _grid_chunk(start, min(start + chunk, total), n, bound_b)
        xsq = np.einsum("ij,ij->i", xs, xs)
        ys = xs.astype(np.float64) @ a.T
        ysq = np.einsum("ij,ij->i", ys, ys)
        nz = xsq > 0
        count += int(np.count_nonzero(nz & (ysq < kappa_sq_m * xsq)))
        first = np.argmax(xs != 0, axis=1)
        canon = nz & (xs[np.arange(xs.shape[0]), first] > 0)
        if not np.any(canon):
            continue
        r2 = np.full(xs.shape[0], np.inf)
        r2[canon] = ysq[canon] / xsq[canon]
        k = int(np.argmin(r2))
        if r2[k] < best_r2:
            best_r2 = float(r2[k])
            best = xs[k].copy()
    return best, best_r2, count


# ---------------------------------------------------------------- lattice points in a ball


@njit
def count_ball_points_numba(center, radius_sq):
    """Number of k in Z^d with ||k - center||^2 <= radius_sq."""
    d = center.shape[0]
    r = math.sqrt(radius_sq)
    lo = np.empty(d, dtype=np.int64)
    hi = np.empty(d, dtype=np.int64)
    for i in range(d):
        lo[i] = math.ceil(center[i] - r)
        hi[i] = math.floor(center[i] + r)
        if lo[i] > hi[i]:
            return 0
    k = lo.copy()
    count = 0
    while True:
        s = 0.0
        for i in range(d):
            diff = k[i] - center[i]
            s += diff * diff
        if s <= radius_sq:
            count += 1
        j = d - 1
        while j >= 0 and k[j] == hi[j]:
            k[j] = lo[j]
            j -= 1
        if j < 0:
            break
        k[j] += 1
    return count


def count_ball_points_numpy(center, radius_sq, chunk=1 << 16):
    center = np.asarray(center, dtype=np.float64)
    r = math.sqrt(radius_sq)
    lo = np.ceil(center - r).astype(np.int64)
    hi = np.floor(center + r).astype(np.int64)
    if np.any(lo > hi):
        return 0
    widths = hi - lo + 1
    total = int(np.prod(widths))
    d = center.shape[0]
    strides = np.ones(d, dtype=np.int64)
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * widths[i + 1]
    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        pts = (idx[:, None] // strides[None, :]) % widths[None, :] + lo[None, :]
        diff = pts - center[None, :]
        s = np.zeros(pts.shape[0])
        for i in range(d):  # sequential sum keeps parity with the numba kernel
            s += diff[:, i] * diff[:, i]
        count += int(np.count_nonzero(s <= radius_sq))
    return count


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    cool_run = cool_run_numba
    enumerate_grid = enumerate_grid_numba
    count_ball_points = count_ball_points_numba
else:
    cool_run = cool_run_numpy
    enumerate_grid = enumerate_grid_numpy
    count_ball_points = count_ball_points_numpy
