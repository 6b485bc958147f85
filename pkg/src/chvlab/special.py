"""Regularized incomplete gamma and the chi-squared CDF.

Written in log space so the lower tail stays usable far below the
double-precision underflow of the plain CDF (needed for tail bounds at
tiny contraction factors).
"""
import math

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 200_000


def ln_plus(x):
    """max(ln x, 1)."""
    return max(math.log(x), 1.0)


def _d_minus_log1p(d):
    # d - log1p(d), with a series near 0 to avoid cancellation
    if abs(d) < 0.25:
        total = 0.0
        power = d * d
        for k in range(2, 60):
            term = power / k
            total += term if k % 2 == 0 else -term
            if abs(term) < 1e-18 * abs(total):
                break
            power *= d
        return total
    return d - math.log1p(d)


def _stirling_correction(a):
    # lgamma(a + 1) - (a ln a - a + 0.5 ln(2 pi a)) for a >= 10
    inv = 1.0 / a
    inv2 = inv * inv
    return inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 * (1 / 1680 - inv2 / 1188))))


def _log_prefix(a, x):
    """log(x**a * exp(-x) / Gamma(a + 1))."""
    if a >= 10.0:
        d = (x - a) / a
        core = -a * _d_minus_log1p(d) if abs(d) < 0.25 else a * (math.log(x) - math.log(a)) - x + a
        return core - 0.5 * math.log(2 * math.pi * a) - _stirling_correction(a)
    return a * math.log(x) - x - math.lgamma(a + 1)


def _log_series(a, x):
    # log P(a, x) via the power series; valid for x < a + 1
    term = 1.0
    total = 1.0
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _EPS:
            break
    return _log_prefix(a, x) + math.log(total)


def _log_upper_cf(a, x):
    # log Q(a, x) via the modified Lentz continued fraction; valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return _log_prefix(a, x) + math.log(a) + math.log(h)


def log_gammainc_lower(a, x):
    """Natural log of the regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return _log_series(a, x)
    return math.log1p(-math.exp(_log_upper_cf(a, x)))


def gammainc_lower(a, x):
    return math.exp(log_gammainc_lower(a, x))


def chi2_logcdf(k, t):
    """log Pr[Z <= t] for Z ~ chi-squared with k degrees of freedom."""
    if k < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return log_gammainc_lower(0.5 * k, 0.5 * t)


def chi2_cdf(k, t):
    """Pr[Z <= t] for Z ~ chi-squared with k degrees of freedom.

    Equals the regularized lower incomplete gamma P(k/2, t/2).

    >>> round(chi2_cdf(2, 2.0), 10)
    0.6321205588
    """
    return math.exp(chi2_logcdf(k, t))
