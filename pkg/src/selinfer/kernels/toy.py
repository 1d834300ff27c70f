"""Batch evaluation of the two-hypothesis toy rejection regions.

Variant codes follow the order of :class:`selinfer.toy.ToyVariant`.
The scalar rules in :mod:`selinfer.toy` are the readable reference; these
kernels re-express the same regions for large Monte Carlo batches and grids,
and are checked against the reference point by point.
"""

import numpy as np

from .._accel import dispatch, njit

COND_SEL_FWER, COND_SEL_FDR, COND_SEL_FCR, COND_IMPROVED_FDR, SELECTIVE_IMPROVED_FDR, MABH = range(6)


@njit(cache=True)
def _hoch(q1, q2, a):
    both = q1 <= a and q2 <= a
    return both or q1 <= a / 2, both or q2 <= a / 2


@njit(cache=True)
def _mabh(q1, q2, a):
    lo = min(q1, q2)
    hi = max(q1, q2)
    both = (q1 <= a and q2 <= a) or (lo <= a / 2 and hi <= 2 * a)
    return both or q1 <= a / 2, both or q2 <= a / 2


@njit(cache=True)
def toy_rule(p1, p2, lam, alpha, variant):
    s1 = p1 <= lam
    s2 = p2 <= lam
    if variant == MABH:
        return _mabh(p1, p2, alpha)
    if variant == SELECTIVE_IMPROVED_FDR:
        ap = alpha / (2 * lam - lam * lam)
        first_small = p1 <= p2
        small = p1 if first_small else p2
        large = p2 if first_small else p1
        rs = small <= lam * ap / 2 or (small <= lam * ap and (large <= lam * ap or large > lam))
        rl = rs and large <= 2 * alpha
        if first_small:
            return rs, rl
        return rl, rs
    if variant == COND_SEL_FCR:
        return s1 and p1 / lam <= alpha, s2 and p2 / lam <= alpha
    if s1 and s2:
        if variant == COND_SEL_FWER:
            return _hoch(p1 / lam, p2 / lam, alpha)
        return _mabh(p1 / lam, p2 / lam, alpha)
    if variant == COND_IMPROVED_FDR:
        if s1:
            r1 = p1 / lam <= alpha
            return r1, r1 and (p2 - lam) / (1 - lam) <= 2 * alpha
        if s2:
            r2 = p2 / lam <= alpha
            return r2 and (p1 - lam) / (1 - lam) <= 2 * alpha, r2
        return _mabh((p1 - lam) / (1 - lam), (p2 - lam) / (1 - lam), alpha)
    # COND_SEL_FWER / COND_SEL_FDR with at most one selected
    return s1 and p1 / lam <= alpha, s2 and p2 / lam <= alpha


@njit(cache=True)
def _toy_kernel(p1, p2, lam, alpha, variant):
    n = p1.shape[0]
    r1 = np.empty(n, dtype=np.bool_)
    r2 = np.empty(n, dtype=np.bool_)
    for k in range(n):
        r1[k], r2[k] = toy_rule(p1[k], p2[k], lam, alpha, variant)
    return r1, r2


def _toy_numba(p1, p2, lam, alpha, variant):
    p1 = np.ascontiguousarray(p1, dtype=float)
    p2 = np.ascontiguousarray(p2, dtype=float)
    return _toy_kernel(p1, p2, float(lam), float(alpha), int(variant))


def _hoch_np(q1, q2, a):
    both = (q1 <= a) & (q2 <= a)
    return both | (q1 <= a / 2), both | (q2 <= a / 2)


def _mabh_np(q1, q2, a):
    lo = np.minimum(q1, q2)
    hi = np.maximum(q1, q2)
    both = ((q1 <= a) & (q2 <= a)) | ((lo <= a / 2) & (hi <= 2 * a))
    return both | (q1 <= a / 2), both | (q2 <= a / 2)


def _toy_numpy(p1, p2, lam, alpha, variant):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    s1 = p1 <= lam
    s2 = p2 <= lam
    if variant == MABH:
        return _mabh_np(p1, p2, alpha)
    if variant == SELECTIVE_IMPROVED_FDR:
        ap = alpha / (2 * lam - lam * lam)
        first_small = p1 <= p2
        small = np.minimum(p1, p2)
        large = np.maximum(p1, p2)
        rs = (small <= lam * ap / 2) | ((small <= lam * ap) & ((large <= lam * ap) | (large > lam)))
        rl = rs & (large <= 2 * alpha)
        return np.where(first_small, rs, rl), np.where(first_small, rl, rs)
    sel1 = s1 & (p1 / lam <= alpha)
    sel2 = s2 & (p2 / lam <= alpha)
    if variant == COND_SEL_FCR:
        return sel1, sel2
    both = s1 & s2
    rule = _hoch_np if variant == COND_SEL_FWER else _mabh_np
    b1, b2 = rule(p1 / lam, p2 / lam, alpha)
    r1 = np.where(both, b1, sel1)
    r2 = np.where(both, b2, sel2)
    if variant == COND_IMPROVED_FDR:
        u1 = (p1 - lam) / (1 - lam)
        u2 = (p2 - lam) / (1 - lam)
        only1 = s1 & ~s2
        only2 = s2 & ~s1
        r2 = r2 | (only1 & sel1 & (u2 <= 2 * alpha))
        r1 = r1 | (only2 & sel2 & (u1 <= 2 * alpha))
        e1, e2 = _mabh_np(u1, u2, alpha)
        none = ~s1 & ~s2
        r1 = np.where(none, e1, r1)
        r2 = np.where(none, e2, r2)
    return r1, r2


toy_reject_batch = dispatch(_toy_numba, _toy_numpy)
toy_reject_batch.__doc__ = """Rejection indicators ``(r1, r2)`` for arrays of p-value pairs."""
