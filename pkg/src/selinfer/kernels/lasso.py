"""Cyclic coordinate descent for batches of lasso problems sharing one Gram matrix.

Objective per problem: 0.5 * ||y - X b||^2 + lam * ||b||_1, supplied through
``gram = X^T X`` and ``xty = X^T y`` (one row per problem).

Stopping rule: a sweep whose largest coefficient change ``d`` satisfies
``d * max_j sum_k |gram[j, k]| < tol``.  Each coordinate is exactly
stationary right after its own update and later updates in the sweep move
its gradient by at most that product, so the KKT residuals of the returned
point are bounded by ``tol`` (up to rounding).
"""

import numpy as np

from .._accel import dispatch, njit


@njit(cache=True)
def _cd_kernel(gram, xty, lam, tol, max_sweeps):
    n_prob, m = xty.shape
    beta = np.zeros((n_prob, m))
    sweeps = np.zeros(n_prob, dtype=np.int64)
    scale = 0.0
    for j in range(m):
        s = 0.0
        for k in range(m):
            s += abs(gram[j, k])
        if s > scale:
            scale = s
    for p in range(n_prob):
        converged = False
        it = 0
        while it < max_sweeps:
            it += 1
            dmax = 0.0
            for j in range(m):
                z = xty[p, j]
                for k in range(m):
                    if k != j:
                        z -= gram[j, k] * beta[p, k]
                if z > lam:
                    new = (z - lam) / gram[j, j]
                elif z < -lam:
                    new = (z + lam) / gram[j, j]
                else:
                    new = 0.0
                d = abs(new - beta[p, j])
                if d > dmax:
                    dmax = d
                beta[p, j] = new
            if dmax * scale < tol:
                converged = True
                break
        sweeps[p] = it if converged else -1
    return beta, sweeps


def _cd_numba(gram, xty, lam, tol, max_sweeps):
    gram = np.ascontiguousarray(gram, dtype=float)
    xty = np.ascontiguousarray(np.atleast_2d(xty), dtype=float)
    return _cd_kernel(gram, xty, float(lam), float(tol), int(max_sweeps))


def _cd_numpy(gram, xty, lam, tol, max_sweeps):
    gram = np.asarray(gram, dtype=float)
    xty = np.atleast_2d(np.asarray(xty, dtype=float))
    n_prob, m = xty.shape
    beta = np.zeros((n_prob, m))
    sweeps = np.full(n_prob, -1, dtype=np.int64)
    scale = np.abs(gram).sum(axis=1).max()
    active = np.arange(n_prob)
    for it in range(1, max_sweeps + 1):
        b = beta[active]
        z_all = xty[active]
        dmax = np.zeros(active.size)
        for j in range(m):
            z = z_all[:, j] - b @ gram[j] + gram[j, j] * b[:, j]
            new = np.sign(z) * np.maximum(np.abs(z) - lam, 0.0) / gram[j, j]
            dmax = np.maximum(dmax, np.abs(new - b[:, j]))
            b[:, j] = new
        beta[active] = b
        done = dmax * scale < tol
        sweeps[active[done]] = it
        active = active[~done]
        if active.size == 0:
            break
    return beta, sweeps


lasso_cd = dispatch(_cd_numba, _cd_numpy)
lasso_cd.__doc__ = """Solve a batch of lasso problems; returns ``(beta, sweeps)``.

``sweeps[p] == -1`` flags a problem that did not converge within
``max_sweeps``.
"""
