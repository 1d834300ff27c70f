"""Standard normal tails and truncated-normal CDFs in log space.

Truncation regions are given in standardized coordinates: ``lo < hi`` with
``inside=True`` meaning the open interval ``(lo, hi)`` and ``inside=False``
its complement ``(-inf, lo] U [hi, inf)``.  Every probability is assembled
from ``log Phi`` values so that regions carrying astronomically little mass
(far tails, CI searches with the mean pushed 1e6 sd away) keep full relative
accuracy.
"""

import math

import numpy as np
from scipy import special

from .._accel import dispatch, njit

SQRT1_2 = 1.0 / math.sqrt(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def log_ndtr_scalar(x):
    """log Phi(x) with relative accuracy across the whole real line."""
    if x > 6.0:
        return math.log1p(-0.5 * math.erfc(x * SQRT1_2))
    if x > -20.0:
        return math.log(0.5 * math.erfc(-x * SQRT1_2))
    if x == -math.inf:
        return -math.inf
    # asymptotic series of Mills' ratio; terms shrink until k ~ x^2 / 2
    x2inv = 1.0 / (x * x)
    total = 1.0
    term = 1.0
    k = 1
    while True:
        term *= -(2 * k - 1) * x2inv
        if abs(term) < 1e-17 * abs(total):
            break
        total += term
        k += 1
    return -0.5 * x * x - math.log(-x) - LOG_SQRT_2PI + math.log(total)


@njit(cache=True)
def _log1mexp(d):
    # log(1 - exp(d)) for d <= 0
    if d > -0.6931471805599453:
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


@njit(cache=True)
def _logaddexp(u, v):
    if u == -math.inf:
        return v
    if v == -math.inf:
        return u
    if u > v:
        return u + math.log1p(math.exp(v - u))
    return v + math.log1p(math.exp(u - v))


@njit(cache=True)
def _log_interval_mass(lo, hi):
    """log(Phi(hi) - Phi(lo)) for lo < hi."""
    if hi <= lo:
        return -math.inf
    if lo >= 0.0:
        l_lo = log_ndtr_scalar(-lo)
        return l_lo + _log1mexp(log_ndtr_scalar(-hi) - l_lo)
    l_hi = log_ndtr_scalar(hi)
    return l_hi + _log1mexp(log_ndtr_scalar(lo) - l_hi)


@njit(cache=True)
def log_cdf_scalar(x, lo, hi, inside):
    """log P(Z <= x | Z in region) for standard normal Z (standardized inputs).

    Returns NaN when the region carries no representable mass.
    """
    if inside:
        if x <= lo:
            return -math.inf
        if x >= hi:
            return 0.0
        lm = _log_interval_mass(lo, hi)
        if lm == -math.inf or lm != lm:
            return math.nan
        return _log_interval_mass(lo, x) - lm
    la = log_ndtr_scalar(lo)
    lb = log_ndtr_scalar(-hi)
    lm = _logaddexp(la, lb)
    if x <= lo:
        return log_ndtr_scalar(x) - lm
    if x < hi:
        return la - lm
    lx = log_ndtr_scalar(-x)
    upper = lb + _log1mexp(lx - lb) if lx < lb else -math.inf
    return _logaddexp(la, upper) - lm


@njit(cache=True)
def cdf_sf_scalar(x, lo, hi, inside):
    """(F, 1 - F), each computed in the form accurate for small values."""
    f = math.exp(log_cdf_scalar(x, lo, hi, inside))
    g = math.exp(log_cdf_scalar(-x, -hi, -lo, inside))
    return f, g


@njit(cache=True)
def _tn_cdf_sf_kernel(x, mean, sd, lo, hi, inside):
    n = x.shape[0]
    f = np.empty(n)
    g = np.empty(n)
    for k in range(n):
        s = sd[k]
        f[k], g[k] = cdf_sf_scalar(
            (x[k] - mean[k]) / s, (lo[k] - mean[k]) / s, (hi[k] - mean[k]) / s, inside[k]
        )
    return f, g


def _broadcast(x, mean, sd, lo, hi, inside):
    arrs = np.broadcast_arrays(
        np.asarray(x, dtype=float),
        np.asarray(mean, dtype=float),
        np.asarray(sd, dtype=float),
        np.asarray(lo, dtype=float),
        np.asarray(hi, dtype=float),
        np.asarray(inside, dtype=bool),
    )
    shape = arrs[0].shape
    return shape, [np.ascontiguousarray(a).ravel() for a in arrs]


def _tn_cdf_sf_numba(x, mean, sd, lo, hi, inside):
    shape, (x, mean, sd, lo, hi, inside) = _broadcast(x, mean, sd, lo, hi, inside)
    f, g = _tn_cdf_sf_kernel(x, mean, sd, lo, hi, inside)
    return f.reshape(shape), g.reshape(shape)


# --- numpy path ---------------------------------------------------------------


def _log1mexp_np(d):
    d = np.minimum(d, 0.0)
    return np.where(d > -np.log(2.0), np.log(-np.expm1(d)), np.log1p(-np.exp(d)))


def _log_interval_mass_np(lo, hi):
    upper = lo >= 0.0
    l_far = np.where(upper, special.log_ndtr(-lo), special.log_ndtr(hi))
    l_near = np.where(upper, special.log_ndtr(-hi), special.log_ndtr(lo))
    out = l_far + _log1mexp_np(l_near - l_far)
    return np.where(hi > lo, out, -np.inf)


def _log_cdf_np(x, lo, hi, inside):
    out = np.empty_like(x)
    ins = inside
    if ins.any():
        xi, li, hi_ = x[ins], lo[ins], hi[ins]
        lm = _log_interval_mass_np(li, hi_)
        mid = _log_interval_mass_np(li, np.clip(xi, li, hi_)) - lm
        val = np.where(xi <= li, -np.inf, np.where(xi >= hi_, 0.0, mid))
        bad = ~np.isfinite(lm) & (xi > li) & (xi < hi_)
        val[bad] = np.nan
        out[ins] = val
    outs = ~ins
    if outs.any():
        xo, lo_, ho = x[outs], lo[outs], hi[outs]
        la = special.log_ndtr(lo_)
        lb = special.log_ndtr(-ho)
        lm = np.logaddexp(la, lb)
        lx_low = special.log_ndtr(xo)
        lx_up = special.log_ndtr(-xo)
        upper = np.where(lx_up < lb, lb + _log1mexp_np(lx_up - lb), -np.inf)
        val = np.where(
            xo <= lo_, lx_low - lm, np.where(xo < ho, la - lm, np.logaddexp(la, upper) - lm)
        )
        out[outs] = val
    return out


def _tn_cdf_sf_numpy(x, mean, sd, lo, hi, inside):
    shape, (x, mean, sd, lo, hi, inside) = _broadcast(x, mean, sd, lo, hi, inside)
    z = (x - mean) / sd
    zl = (lo - mean) / sd
    zh = (hi - mean) / sd
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = np.exp(_log_cdf_np(z, zl, zh, inside))
        g = np.exp(_log_cdf_np(-z, -zh, -zl, inside))
    return f.reshape(shape), g.reshape(shape)


truncnorm_cdf_sf = dispatch(_tn_cdf_sf_numba, _tn_cdf_sf_numpy)
truncnorm_cdf_sf.__doc__ = """Vectorized (CDF, survival) of normals truncated to a region.

``inside`` selects the interval ``(lo, hi)``; otherwise the region is
``(-inf, lo] U [hi, inf)``.  NaN marks a region with no representable mass.
"""


def _log_ndtr_numba(x):
    x = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(x).ravel()
    return _log_ndtr_vec(flat).reshape(x.shape)


@njit(cache=True)
def _log_ndtr_vec(x):
    out = np.empty(x.shape[0])
    for k in range(x.shape[0]):
        out[k] = log_ndtr_scalar(x[k])
    return out


log_ndtr = dispatch(_log_ndtr_numba, lambda x: special.log_ndtr(np.asarray(x, dtype=float)))
