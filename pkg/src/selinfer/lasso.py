"""Lasso at a fixed penalty and inference conditional on (non-)selection of
a single variable.

The lasso objective is ``0.5 * ||y - X b||^2 + lam * ||b||_1`` with no
``1/n`` factor, so penalties here are ``n`` times the glmnet convention
when columns are scaled to unit variance rather than unit norm.

For variable ``i`` write ``eta = X (X'X)^{-1} e_i``, ``beta_hat = eta'y`` and
``v = y - eta * beta_hat / ||eta||^2``.  Given ``v``, the variable is in the
active set exactly when ``beta_hat`` falls outside ``(a, b)``, where
``a, b = ||eta||^2 (X_i' r -/+ lam)`` and ``r = X_{-i} btilde - v`` with
``btilde`` the lasso fit of ``v`` on the remaining columns.  Conditional on
``v`` and on the selection outcome, ``beta_hat`` is a truncated normal.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .core import ContractViolation, InputDataError, NumericalError, normal_quantile
from .kernels import lasso_cd, truncnorm_cdf_sf

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100_000
CI_START = 10.0
CI_CAP = 1e6


@dataclass(frozen=True, eq=False)
class LinearModelData:
    X: np.ndarray
    y: np.ndarray
    sigma2: float
    names: tuple = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ContractViolation("X must be a matrix")
        n, m = X.shape
        if y.size != n:
            raise ContractViolation(f"y has {y.size} entries but X has {n} rows")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ContractViolation("X and y must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ContractViolation(f"sigma2={self.sigma2!r} must be positive")
        if m < 1 or m > n or np.linalg.matrix_rank(X) < m:
            raise ContractViolation(f"X ({n}x{m}) must have full column rank")
        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(m))
        if len(names) != m:
            raise ContractViolation("one name per column is required")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.X.T @ self.X

    @cached_property
    def gram_inv(self) -> np.ndarray:
        return np.linalg.inv(self.gram)


class Region(enum.Enum):
    OUTSIDE = "outside"  # (-inf, a] U [b, inf)
    INSIDE = "inside"  # (a, b)


@dataclass(frozen=True)
class TruncatedNormalSpec:
    mean: float
    sd: float
    a: float
    b: float
    region: Region

    def __post_init__(self):
        if not (math.isfinite(self.sd) and self.sd > 0):
            raise ContractViolation(f"sd={self.sd!r} must be positive")
        if not self.a < self.b:
            raise ContractViolation(f"need a < b, got a={self.a!r}, b={self.b!r}")


@dataclass(frozen=True)
class PosiQuantities:
    i: int
    beta_hat: float
    eta_norm2: float
    a: float
    b: float
    selected: bool

    @property
    def region(self) -> Region:
        return Region.OUTSIDE if self.selected else Region.INSIDE

    def consistent(self) -> bool:
        """Whether the selection flag agrees with the truncation region."""
        return self.selected == (not self.a < self.beta_hat < self.b)


def _check_lam(lam):
    if not (math.isfinite(lam) and lam >= 0):
        raise ContractViolation(f"lambda={lam!r} must be finite and >= 0")


def _solve(gram, xty, lam, tol, max_sweeps, what):
    beta, sweeps = lasso_cd(gram, xty, lam, tol, max_sweeps)
    bad = np.flatnonzero(sweeps < 0)
    if bad.size:
        raise NumericalError(
            f"coordinate descent for {what} did not converge in {max_sweeps} sweeps "
            f"(lambda={lam}, tol={tol}, {bad.size} problem(s), first index {bad[0]})"
        )
    return beta


def lasso_fit(data: LinearModelData, lam: float, tol: float = DEFAULT_TOL,
              max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Cyclic coordinate descent from zero; KKT residuals of the result are below ``tol``."""
    _check_lam(lam)
    if not tol > 0:
        raise ContractViolation("tol must be positive")
    return _solve(data.gram, data.X.T @ data.y, lam, tol, max_sweeps, "the full design")[0]


def kkt_residual(data: LinearModelData, beta: np.ndarray, lam: float) -> float:
    """Largest violation of the lasso subgradient conditions at ``beta``."""
    g = data.X.T @ (data.y - data.X @ beta)
    nz = beta != 0
    res = np.where(nz, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(res.max())


def posi_batch(X: np.ndarray, Y: np.ndarray, lam: float, i: int, tol: float = DEFAULT_TOL,
               selected: np.ndarray | None = None) -> dict:
    """Truncation quantities of variable ``i`` (1-based) for each row of ``Y``.

    Returns arrays ``beta_hat``, ``a``, ``b``, ``selected`` and the scalar
    ``eta_norm2``.  ``selected`` may be passed in when the full-design fits
    are already available.
    """
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, m = X.shape
    if not 1 <= i <= m:
        raise ContractViolation(f"variable index {i} outside 1..{m}")
    _check_lam(lam)
    gram = X.T @ X
    if np.linalg.matrix_rank(X) < m:
        raise ContractViolation("rank-deficient design")
    k = i - 1
    eta = X @ np.linalg.inv(gram)[:, k]
    eta2 = float(eta @ eta)
    beta_hat = Y @ eta
    V = Y - np.outer(beta_hat / eta2, eta)
    rest = [j for j in range(m) if j != k]
    if rest:
        Xr = X[:, rest]
        bt = _solve(gram[np.ix_(rest, rest)], V @ Xr, lam, tol, MAX_SWEEPS, f"variable {i}")
        R = bt @ Xr.T - V
    else:
        R = -V
    xr = R @ X[:, k]
    if selected is None:
        full = _solve(gram, Y @ X, lam, tol, MAX_SWEEPS, "the full design")
        selected = full[:, k] != 0
    return {
        "beta_hat": beta_hat,
        "a": eta2 * (xr - lam),
        "b": eta2 * (xr + lam),
        "selected": np.asarray(selected, dtype=bool),
        "eta_norm2": eta2,
    }


def posi_quantities(data: LinearModelData, lam: float, i: int,
                    tol: float = DEFAULT_TOL) -> PosiQuantities:
    """At ``lam = 0`` the gap ``(a, b)`` is empty and every variable is selected."""
    if not 1 <= i <= data.m:
        raise ContractViolation(f"variable index {i} outside 1..{data.m}")
    sel = lam == 0 or bool(lasso_fit(data, lam, tol)[i - 1] != 0)
    out = posi_batch(data.X, data.y[None, :], lam, i, tol, selected=[sel])
    return PosiQuantities(
        i=i,
        beta_hat=float(out["beta_hat"][0]),
        eta_norm2=out["eta_norm2"],
        a=float(out["a"][0]),
        b=float(out["b"][0]),
        selected=sel,
    )


# --- truncated normal inference ----------------------------------------------


def _cdf_sf(x, mean, sd, a, b, region: Region):
    if a >= b:
        # empty gap: the untruncated normal
        z = (x - mean) / sd
        return float(special.ndtr(z)), float(special.ndtr(-z))
    f, g = truncnorm_cdf_sf(x, mean, sd, a, b, region is Region.INSIDE)
    f, g = float(f), float(g)
    if not (math.isfinite(f) and math.isfinite(g)):
        raise NumericalError(
            f"truncation region {region.value}({a}, {b}) has no representable mass "
            f"under N({mean}, {sd}^2)"
        )
    return f, g


def truncnorm_cdf(x: float, spec: TruncatedNormalSpec) -> float:
    if not math.isfinite(x):
        raise ContractViolation("x must be finite")
    return _cdf_sf(x, spec.mean, spec.sd, spec.a, spec.b, spec.region)[0]


def truncnorm_sf(x: float, spec: TruncatedNormalSpec) -> float:
    """``1 - truncnorm_cdf``, accurate when it is tiny."""
    if not math.isfinite(x):
        raise ContractViolation("x must be finite")
    return _cdf_sf(x, spec.mean, spec.sd, spec.a, spec.b, spec.region)[1]


def _sd(q: PosiQuantities, sigma2: float) -> float:
    if not sigma2 > 0:
        raise ContractViolation("sigma2 must be positive")
    return math.sqrt(sigma2 * q.eta_norm2)


def selective_pvalue(q: PosiQuantities, sigma2: float, null_value: float = 0.0) -> float:
    """Two-sided p-value ``2 min(F, 1 - F)`` of the truncated normal at ``beta_hat``."""
    f, g = _cdf_sf(q.beta_hat, null_value, _sd(q, sigma2), q.a, q.b, q.region)
    return min(1.0, 2.0 * min(f, g))


def _root_increasing(fun, target, x0, scale):
    """Solve ``fun(theta) = target`` for nondecreasing ``fun`` by bisection.

    The bracket grows tenfold from ``x0 +- CI_START * scale``; past
    ``CI_CAP * scale`` the root is reported as -inf or +inf.
    """
    if fun(x0) >= target:
        hi, step = x0, -1.0
    else:
        lo, step = x0, 1.0
    width = CI_START * scale
    while True:
        x = x0 + step * width
        v = fun(x)
        if step < 0 and v < target:
            lo = x
            break
        if step > 0 and v >= target:
            hi = x
            break
        if step < 0:
            hi = x
        else:
            lo = x
        if width >= CI_CAP * scale:
            return step * math.inf
        width = min(10.0 * width, CI_CAP * scale)
    tol = 1e-12 * (scale + abs(x0))
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if fun(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def selective_ci(q: PosiQuantities, sigma2: float, level: float) -> tuple:
    """Equal-tailed interval for the coefficient, possibly unbounded."""
    if not 0.0 < level < 1.0:
        raise ContractViolation(f"level={level!r} outside (0, 1)")
    half = (1.0 - level) / 2.0
    sd = _sd(q, sigma2)
    if q.a >= q.b:
        z = -normal_quantile(half)
        return q.beta_hat - z * sd, q.beta_hat + z * sd

    def upper_tail(theta):
        # P(beta_hat' > beta_hat | theta): increasing in theta
        return _cdf_sf(q.beta_hat, theta, sd, q.a, q.b, q.region)[1]

    def neg_lower_tail(theta):
        return -_cdf_sf(q.beta_hat, theta, sd, q.a, q.b, q.region)[0]

    lo = _root_increasing(upper_tail, half, q.beta_hat, sd)
    hi = _root_increasing(neg_lower_tail, -half, q.beta_hat, sd)
    return lo, hi


# --- lambda path ----------------------------------------------------------------


@dataclass(frozen=True)
class PathRecord:
    variable: str
    lam: float
    selected: bool
    beta_hat: float
    p_value: float
    ci_lo: float
    ci_hi: float
    change: bool  # active set differs from the previous grid value


def lambda_path(data: LinearModelData, grid: Sequence[float], level: float,
                tol: float = DEFAULT_TOL) -> list:
    grid = [float(g) for g in grid]
    if not grid:
        raise ContractViolation("empty lambda grid")
    if any(g <= 0 or not math.isfinite(g) for g in grid):
        raise ContractViolation("lambda grid values must be positive and finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ContractViolation("lambda grid must be strictly increasing")
    return [r for lam, changed in _path_points(data, grid, tol) for r in
            _records_at(data, lam, level, tol, changed)]


def _path_points(data, grid, tol):
    prev = None
    for lam in grid:
        active = tuple(lasso_fit(data, lam, tol) != 0)
        yield lam, prev is not None and active != prev
        prev = active


def single_lambda(data: LinearModelData, lam: float, level: float,
                  tol: float = DEFAULT_TOL) -> list:
    _check_lam(lam)
    return _records_at(data, lam, level, tol, False)


def _records_at(data, lam, level, tol, changed):
    beta = lasso_fit(data, lam, tol) if lam > 0 else None
    out = []
    for i in range(1, data.m + 1):
        q = posi_quantities(data, lam, i, tol)
        if beta is not None:
            q = PosiQuantities(q.i, q.beta_hat, q.eta_norm2, q.a, q.b, bool(beta[i - 1] != 0))
        lo, hi = selective_ci(q, data.sigma2, level)
        out.append(PathRecord(data.names[i - 1], lam, q.selected, q.beta_hat,
                              selective_pvalue(q, data.sigma2), lo, hi, changed))
    return out


# --- data loading -----------------------------------------------------------------


def _sniff_delimiter(header: str) -> str:
    return "\t" if header.count("\t") > header.count(",") else ","


def load_regression_data(path, response: str, *, sigma2: float | None = None,
                         standardize: bool = True, drop: Sequence[str] = (),
                         columns: Sequence[str] | None = None) -> LinearModelData:
    """Read a delimited table with a header row into a regression problem.

    A column with an empty header (row labels) is ignored.  With
    ``standardize`` the response is centered and each predictor centered and
    scaled to unit Euclidean norm.  Without ``sigma2`` the noise variance is
    the residual mean square of the full least-squares fit.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InputDataError(f"cannot read {path}: {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputDataError(f"{path}: empty file")
    rows = list(csv.reader(lines, delimiter=_sniff_delimiter(lines[0])))
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise InputDataError(f"{path}: no data rows")
    # a header one field short means the first field of each row is a label
    if all(len(r) == len(header) + 1 for r in body):
        header = [""] + header
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise InputDataError(f"{path}: line {k} has {len(r)} fields, header has {len(header)}")
    if response not in header:
        raise InputDataError(f"{path}: response column {response!r} not found")
    missing = [c for c in list(drop) + list(columns or []) if c not in header]
    if missing:
        raise InputDataError(f"{path}: unknown column(s) {', '.join(missing)}")
    if columns is None:
        columns = [h for h in header if h and h != response and h not in set(drop)]
    if response in columns:
        raise InputDataError("the response cannot also be a predictor")

    def numeric(name):
        j = header.index(name)
        out = np.empty(len(body))
        for k, r in enumerate(body):
            try:
                out[k] = float(r[j])
            except ValueError:
                raise InputDataError(
                    f"{path}: non-numeric value {r[j]!r} at row {k + 1} (line {k + 2}), "
                    f"column {name!r}"
                ) from None
            if not math.isfinite(out[k]):
                raise InputDataError(f"{path}: non-finite value at row {k + 1}, column {name!r}")
        return out

    y = numeric(response)
    X = np.column_stack([numeric(c) for c in columns]) if columns else np.empty((len(body), 0))
    n, m = X.shape
    if m == 0:
        raise InputDataError(f"{path}: no predictor columns")
    df = n - m - (1 if standardize else 0)
    if df <= 0:
        raise InputDataError(f"{path}: {n} rows are too few for {m} predictors")
    if standardize:
        y = y - y.mean()
        X = X - X.mean(axis=0)
        norms = np.linalg.norm(X, axis=0)
        flat = [c for c, s in zip(columns, norms) if s == 0]
        if flat:
            raise InputDataError(f"{path}: constant column(s) {', '.join(flat)}")
        X = X / norms
    if np.linalg.matrix_rank(X) < m:
        raise InputDataError(f"{path}: predictors are collinear")
    if sigma2 is None:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        sigma2 = float(resid @ resid) / df
    return LinearModelData(X, y, float(sigma2), tuple(columns))
