"""Rejection counts of the four winner procedures over a batch of p-value rows."""

import math

import numpy as np

from .._accel import dispatch, njit


@njit(cache=True)
def _bh_count(vals, skip, level, buf):
    """BH rejection count without sorting, ignoring position ``skip``.

    Each value goes to the smallest rank ``k`` with ``v <= k * level / m``;
    the count is the largest ``k`` whose cumulative bucket total reaches ``k``.
    """
    m = vals.shape[0] - (1 if skip >= 0 else 0)
    buf[: m + 1] = 0
    for j in range(vals.shape[0]):
        if j == skip:
            continue
        v = vals[j]
        if v > level:
            continue
        k = math.ceil(v * m / level)
        if k < 1:
            k = 1
        while k > 1 and v <= (k - 1) * level / m:
            k -= 1
        while k <= m and v > k * level / m:
            k += 1
        if k <= m:
            buf[k] += 1
    best = 0
    total = 0
    for k in range(1, m + 1):
        total += buf[k]
        if total >= k:
            best = k
    return best


@njit(cache=True)
def _winner_kernel(p, alpha):
    n_rep, n = p.shape
    counts = np.zeros((n_rep, 4), dtype=np.int64)
    c_thr = 1.0 - (1.0 - alpha) ** (1.0 / n)
    level_b = n * alpha / (n - 1)
    buf = np.zeros(n + 1, dtype=np.int64)
    q = np.empty(n)
    for r in range(n_rep):
        row = p[r]
        w = 0
        for j in range(1, n):
            if row[j] < row[w]:
                w = j
        first = row[w]
        second = np.inf
        for j in range(n):
            if j != w and row[j] < second:
                second = row[j]
        ratio = 0.0 if first == 0.0 else first / second
        if ratio <= alpha:
            counts[r, 0] = 1
            for j in range(n):
                q[j] = (row[j] - first) / (1.0 - first)
            counts[r, 1] = 1 + _bh_count(q, w, level_b, buf)
        if first <= c_thr:
            counts[r, 2] = 1
        counts[r, 3] = _bh_count(row, -1, alpha, buf)
    return counts


def _winner_numba(p, alpha):
    return _winner_kernel(np.ascontiguousarray(p, dtype=float), float(alpha))


def _bh_count_sorted_np(ps, level):
    m = ps.shape[1]
    ok = ps <= np.arange(1, m + 1) * level / m
    any_ok = ok.any(axis=1)
    last = m - np.argmax(ok[:, ::-1], axis=1)
    return np.where(any_ok, last, 0)


def _winner_numpy(p, alpha):
    p = np.asarray(p, dtype=float)
    n = p.shape[1]
    ps = np.sort(p, axis=1)
    first = ps[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(first == 0.0, 0.0, first / ps[:, 1])
    rej_a = ratio <= alpha
    counts = np.zeros((p.shape[0], 4), dtype=np.int64)
    counts[:, 0] = rej_a
    if rej_a.any():
        sub = ps[rej_a]
        q = (sub[:, 1:] - sub[:, :1]) / (1.0 - sub[:, :1])
        counts[rej_a, 1] = 1 + _bh_count_sorted_np(q, n * alpha / (n - 1))
    counts[:, 2] = first <= 1.0 - (1.0 - alpha) ** (1.0 / n)
    counts[:, 3] = _bh_count_sorted_np(ps, alpha)
    return counts


winner_counts = dispatch(_winner_numba, _winner_numpy)
winner_counts.__doc__ = """Per-row rejection counts, columns ordered A, B, C, D."""
