"""Seeded Monte Carlo experiments.

Replicate ``r`` of scenario ``s`` draws from the counter-based stream
``(seed, s << 32 | r)``, so results do not depend on chunking or on the
number of workers.  Replicates are processed in fixed-size chunks and
aggregated in replicate order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import datasplit
from .core import ContractViolation
from .kernels import lasso_cd, toy_reject_batch, truncnorm_cdf_sf, uniform_block, winner_counts
from .lasso import posi_batch
from .toy import ToyConfig, ToyVariant

CHUNK = 1 << 16

DEFAULTS = {
    "winner": dict(replicates=10_000, alpha=0.05, n=100, shift=3.0, k_max=10),
    "liu_example": dict(replicates=1_000_000, alpha=0.1, rho=0.95, beta=(5.0, 5.0), sigma2=1.0, lam=0.2),
    "toy": dict(replicates=100_000, alpha=0.3, lam=0.7, shift=3.0),
    "datasplit": dict(replicates=100_000, alpha=0.05, n=20, lam=0.5, n_alt=5, shift=3.0),
    "directional": dict(replicates=100_000, alpha=0.05, delta=0.5),
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    replicates: int
    alpha: float
    params: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.name not in DEFAULTS:
            raise ContractViolation(f"unknown experiment {self.name!r}")
        if not 0 <= self.seed < 2**64:
            raise ContractViolation("seed must fit in 64 unsigned bits")
        if not 1 <= self.replicates < 2**32:
            raise ContractViolation("replicates must lie in [1, 2^32)")
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolation(f"alpha={self.alpha!r} outside (0, 1)")
        if self.workers < 1:
            raise ContractViolation("workers must be >= 1")
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise ContractViolation(f"unknown parameter(s) for {self.name}: {sorted(unknown)}")

    @classmethod
    def default(cls, name: str, seed: int, replicates: int | None = None, alpha: float | None = None,
                workers: int = 1, **params) -> ExperimentConfig:
        if name not in DEFAULTS:
            raise ContractViolation(f"unknown experiment {name!r}")
        d = DEFAULTS[name]
        return cls(name, int(seed), int(replicates or d["replicates"]),
                   float(alpha if alpha is not None else d["alpha"]), params, workers)

    def get(self, key):
        return self.params.get(key, DEFAULTS[self.name][key])


@dataclass(frozen=True)
class ErrorRateEstimate:
    value: float
    mc_se: float
    replicates: int

    @classmethod
    def from_samples(cls, x) -> ErrorRateEstimate:
        x = np.asarray(x, dtype=float)
        n = x.size
        if n == 0:
            return cls(math.nan, math.nan, 0)
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        return cls(float(x.mean()), se, n)

    @classmethod
    def ratio(cls, num, den) -> ErrorRateEstimate:
        """Ratio-of-sums estimate with a delta-method standard error."""
        num = np.asarray(num, dtype=float)
        den = np.asarray(den, dtype=float)
        n = num.size
        total = den.sum()
        if total == 0:
            return cls(math.nan, math.nan, 0)
        r = num.sum() / total
        resid = num - r * den
        se = math.sqrt((resid @ resid) * n / max(n - 1, 1)) / total
        return cls(float(r), float(se), int(np.count_nonzero(den)))


@dataclass
class SuiteResult:
    name: str
    columns: tuple
    rows: list
    violations: list = field(default_factory=list)  # (scenario, replicate, what)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        return rows_to_csv(self.columns, self.rows)


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


# --- plumbing -------------------------------------------------------------------


def _stream_ids(scenario: int, start: int, stop: int) -> np.ndarray:
    return (np.uint64(scenario) << np.uint64(32)) | np.arange(start, stop, dtype=np.uint64)


def _chunked(fn: Callable, reps: int, workers: int) -> list:
    """``fn(start, stop)`` over consecutive chunks, results in replicate order."""
    bounds = [(s, min(s + CHUNK, reps)) for s in range(0, reps, CHUNK)]
    if workers == 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ab: fn(*ab), bounds))


def _concat(parts, key):
    return np.concatenate([p[key] for p in parts])


def _normals(seed, ids, k):
    return special.ndtri(uniform_block(seed, ids, k, 0, open_interval=True))


def _alt_pvalues(z, shift):
    """One-sided p-values of a normal statistic shifted by ``shift``: 1 - Phi(Z + shift)."""
    return special.ndtr(-(z + shift))


# --- winner -----------------------------------------------------------------------


def run_winner_experiment(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.name != "winner":
        raise ContractViolation("expected a winner config")
    n, shift, k_max = int(cfg.get("n")), float(cfg.get("shift")), int(cfg.get("k_max"))
    if n < 2 or not 0 <= k_max <= n:
        raise ContractViolation("need n >= 2 and 0 <= k_max <= n")
    if n * cfg.alpha / (n - 1) >= 1:
        raise ContractViolation("second-stage level of procedure B must stay below 1")
    rows, violations = [], []
    for k in range(k_max + 1):

        def chunk(a, b, k=k):
            u = uniform_block(cfg.seed, _stream_ids(k, a, b), n, 0, open_interval=True)
            p = u.copy()
            if k:
                p[:, :k] = _alt_pvalues(special.ndtri(u[:, :k]), shift)
            return {"counts": winner_counts(p, cfg.alpha)}

        counts = _concat(_chunked(chunk, cfg.replicates, cfg.workers), "counts")
        for r in np.flatnonzero(counts[:, 1] < counts[:, 0]):
            violations.append((k, int(r), "|R_B| < |R_A|"))
        for j, proc in enumerate("ABCD"):
            est = ErrorRateEstimate.from_samples(counts[:, j])
            rows.append((k, proc, est.value, est.mc_se))
    return SuiteResult("winner", ("k_alternatives", "procedure", "mean_rejections", "mc_se"), rows, violations)


# --- Liu example ------------------------------------------------------------------


def liu_design(rho: float) -> np.ndarray:
    """Two unit-norm columns with inner product ``rho``."""
    c, d = math.sqrt((1 + rho) / 2), math.sqrt((1 - rho) / 2)
    return np.array([[c, c], [-d, d]])


def _covers(bh, beta, sd, a, b, sel, alpha):
    """Whether the equal-tailed ``1 - alpha`` interval covers ``beta``.

    ``beta`` is inside the interval exactly when both tail probabilities of
    the observed statistic under ``beta`` reach ``alpha / 2``.
    """
    f, g = truncnorm_cdf_sf(bh, beta, sd, a, b, ~sel)
    return (f >= alpha / 2) & (g >= alpha / 2)


def liu_replicates(cfg: ExperimentConfig, start: int, stop: int) -> dict:
    """Per-replicate selection and coverage indicators of the Liu example."""
    rho, sigma2, lam = float(cfg.get("rho")), float(cfg.get("sigma2")), float(cfg.get("lam"))
    beta = np.asarray(cfg.get("beta"), dtype=float)
    X = liu_design(rho)
    mu = X @ beta
    sigma = math.sqrt(sigma2)
    Y = mu + sigma * _normals(cfg.seed, _stream_ids(0, start, stop), 2)
    full, sweeps = lasso_cd(X.T @ X, Y @ X, lam, 1e-10, 100_000)
    if (sweeps < 0).any():
        raise ArithmeticError("coordinate descent did not converge in the Liu example")
    sel = full != 0
    out = {"sel": sel, "cov": np.zeros_like(sel), "cov_bonf": np.zeros_like(sel),
           "consistent": np.ones(sel.shape[0], dtype=bool)}
    nsel = sel.sum(axis=1)
    for k in range(2):
        q = posi_batch(X, Y, lam, k + 1, selected=sel[:, k])
        sd = sigma * math.sqrt(q["eta_norm2"])
        bh, a, b = q["beta_hat"], q["a"], q["b"]
        out["cov"][:, k] = _covers(bh, beta[k], sd, a, b, sel[:, k], cfg.alpha)
        adj = cfg.alpha / np.maximum(nsel, 1)
        out["cov_bonf"][:, k] = _covers(bh, beta[k], sd, a, b, sel[:, k], adj)
        inside = (a < bh) & (bh < b)
        out["consistent"] &= sel[:, k] != inside
    return out


LIU_ESTIMATES = (
    "p_single",
    "p_both",
    "coverage_single",
    "coverage_both",
    "marginal_conditional_coverage",
    "fcr",
    "simultaneous_coverage_adjusted",
    "conditional_simultaneous_coverage_both",
)


def run_liu_example(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.name != "liu_example":
        raise ContractViolation("expected a liu_example config")
    if not -1 < float(cfg.get("rho")) < 1:
        raise ContractViolation("rho must lie in (-1, 1)")
    parts = _chunked(lambda a, b: liu_replicates(cfg, a, b), cfg.replicates, cfg.workers)
    sel, cov, bonf = _concat(parts, "sel"), _concat(parts, "cov"), _concat(parts, "cov_bonf")
    consistent = _concat(parts, "consistent")
    nsel = sel.sum(axis=1)
    single, both = nsel == 1, nsel == 2
    cov_sel = cov & sel
    miss = (sel & ~cov).sum(axis=1)

    est = {
        "p_single": ErrorRateEstimate.from_samples(single / 2.0),
        "p_both": ErrorRateEstimate.from_samples(both),
        "coverage_single": ErrorRateEstimate.from_samples(cov_sel[single].any(axis=1)),
        "coverage_both": ErrorRateEstimate.from_samples(cov[both].mean(axis=1)),
        "marginal_conditional_coverage": ErrorRateEstimate.ratio(cov_sel.sum(axis=1), nsel),
        "fcr": ErrorRateEstimate.from_samples(miss / np.maximum(nsel, 1)),
        "simultaneous_coverage_adjusted": ErrorRateEstimate.from_samples(~(sel & ~bonf).any(axis=1)),
        "conditional_simultaneous_coverage_both": ErrorRateEstimate.from_samples(bonf[both].all(axis=1)),
    }
    rows = [(k, est[k].value, est[k].mc_se, est[k].replicates) for k in LIU_ESTIMATES]
    violations = [(0, int(r), "selection flag disagrees with truncation region")
                  for r in np.flatnonzero(~consistent)]
    return SuiteResult("liu_example", ("estimate", "value", "mc_se", "replicates"), rows, violations)


# --- toy --------------------------------------------------------------------------

TOY_TRUTHS = ((), (1,), (2,), (1, 2))  # false nulls in each configuration
TOY_CONDITIONS = ("all", "{}", "{1}", "{2}", "{1,2}")
TOY_TARGET = {
    ToyVariant.COND_SEL_FWER: "FWER",
    ToyVariant.COND_SEL_FDR: "FDR",
    ToyVariant.COND_SEL_FCR: "FCR_STYLE",
    ToyVariant.COND_IMPROVED_FDR: "FDR",
    ToyVariant.SELECTIVE_IMPROVED_FDR: "FDR",
    ToyVariant.MABH: "FDR",
}
SELECTIVE_VARIANTS = frozenset(
    {ToyVariant.COND_SEL_FWER, ToyVariant.COND_SEL_FDR, ToyVariant.COND_SEL_FCR,
     ToyVariant.SELECTIVE_IMPROVED_FDR}
)


def _truth_label(alts) -> str:
    nulls = [i for i in (1, 2) if i not in alts]
    return "nulls={" + ",".join(map(str, nulls)) + "}"


def toy_grid(n: int, cfg: ToyConfig, margin: float = 1e-9) -> np.ndarray:
    """Midpoints of an ``n x n`` grid on the unit square, dropping coordinates
    within ``margin`` of any region threshold."""
    lam, a, ap = cfg.lam, cfg.alpha, cfg.alpha_prime
    th = [lam, lam * ap / 2, lam * ap, 2 * a, a / 2, a, 2 * a]
    for c in (a / 2, a, 2 * a):
        th += [lam * c, lam + (1 - lam) * c]
    pts = (np.arange(n) + 0.5) / n
    keep = np.min(np.abs(pts[:, None] - np.asarray(th)[None, :]), axis=1) > margin
    return pts[keep]


def toy_grid_check(cfg: ToyConfig, n: int = 400) -> dict:
    """Counts of per-point violations of the dominance and intersection relations."""
    g = toy_grid(n, cfg)
    p1, p2 = (x.ravel() for x in np.meshgrid(g, g, indexing="ij"))

    def rej(v):
        return np.column_stack(toy_reject_batch(p1, p2, cfg.lam, cfg.alpha, int(v)))

    base = rej(ToyVariant.COND_SEL_FDR)
    cond = rej(ToyVariant.COND_IMPROVED_FDR)
    sel = rej(ToyVariant.SELECTIVE_IMPROVED_FDR)
    return {
        "points": int(p1.size),
        "cond_sel_subset_cond_improved": int((base & ~cond).any(axis=1).sum()),
        "cond_sel_subset_selective_improved": int((base & ~sel).any(axis=1).sum()),
        "intersection_identity": int((base != (cond & sel)).any(axis=1).sum()),
    }


def run_toy_suite(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.name != "toy":
        raise ContractViolation("expected a toy config")
    tcfg = ToyConfig(float(cfg.get("lam")), cfg.alpha)
    shift = float(cfg.get("shift"))
    variants = [v for v in ToyVariant if _variant_ok(tcfg, v)]
    rows, violations, notes = [], [], []
    for s, alts in enumerate(TOY_TRUTHS):

        def chunk(a, b, s=s, alts=alts):
            u = uniform_block(cfg.seed, _stream_ids(s, a, b), 2, 0, open_interval=True)
            p = u.copy()
            for i in alts:
                p[:, i - 1] = _alt_pvalues(special.ndtri(u[:, i - 1]), shift)
            out = {"p": p}
            for v in variants:
                r1, r2 = toy_reject_batch(p[:, 0], p[:, 1], tcfg.lam, tcfg.alpha, int(v))
                out[int(v)] = np.column_stack((r1, r2))
            return out

        parts = _chunked(chunk, cfg.replicates, cfg.workers)
        p = _concat(parts, "p")
        S = p <= tcfg.lam
        null = np.array([i not in alts for i in (1, 2)])
        code = S[:, 0].astype(int) + 2 * S[:, 1].astype(int)  # 0:{}, 1:{1}, 2:{2}, 3:{1,2}
        masks = {"all": np.ones(len(p), dtype=bool), "{}": code == 0, "{1}": code == 1,
                 "{2}": code == 2, "{1,2}": code == 3}
        for v in variants:
            R = _concat(parts, int(v))
            false = (R & null).sum(axis=1)
            nrej = R.sum(axis=1)
            rates = {"FWER": false > 0, "FDR": false / np.maximum(nrej, 1)}
            if v in SELECTIVE_VARIANTS:
                outside = (R & ~S).any(axis=1)
                for r in np.flatnonzero(outside):
                    violations.append((s, int(r), f"{v.cli_name} rejected outside S"))
                rates["FCR_STYLE"] = false / np.maximum(S.sum(axis=1), 1)
            for cond in TOY_CONDITIONS:
                m = masks[cond]
                for rate, x in rates.items():
                    e = ErrorRateEstimate.from_samples(x[m])
                    rows.append((v.cli_name, _truth_label(alts), cond, rate, e.value, e.mc_se, e.replicates))
    grid = toy_grid_check(tcfg)
    for key, count in grid.items():
        if key != "points" and count:
            violations.append((-1, -1, f"grid {key}: {count} point(s)"))
    notes.append(f"grid check over {grid['points']} points: "
                 + ", ".join(f"{k}={c}" for k, c in grid.items() if k != "points"))
    cols = ("variant", "truth", "condition", "rate", "value", "mc_se", "replicates")
    return SuiteResult("toy", cols, rows, violations, notes)


def _variant_ok(tcfg: ToyConfig, v: ToyVariant) -> bool:
    try:
        tcfg.check(v)
    except ContractViolation:
        return False
    return True


# --- data splitting -----------------------------------------------------------------

Q_GRID = tuple((k + 1) / 20 for k in range(20))


def run_datasplit_suite(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.name != "datasplit":
        raise ContractViolation("expected a datasplit config")
    n, lam = int(cfg.get("n")), float(cfg.get("lam"))
    n_alt, shift = int(cfg.get("n_alt")), float(cfg.get("shift"))
    if not 0 <= n_alt <= n or n < 1 or not 0 < lam < 1:
        raise ContractViolation("need 0 <= n_alt <= n and lambda in (0, 1)")
    scenarios = (("mixed", n_alt), ("global_null", 0))
    rows, violations = [], []
    alpha = cfg.alpha
    for s, (label, k) in enumerate(scenarios):

        def chunk(a, b, s=s, k=k):
            u = uniform_block(cfg.seed, _stream_ids(s, a, b), 2 * n, 0, open_interval=True)
            if k:
                for off in (0, n):
                    u[:, off:off + k] = _alt_pvalues(special.ndtri(u[:, off:off + k]), shift)
            p1, p2 = u[:, :n], u[:, n:]
            S = p1 <= lam
            size = S.sum(axis=1)
            R = S & (p2 <= alpha / np.maximum(size, 1)[:, None])
            Q = np.where(S, lam * p2, 1.0)
            Rq = Q <= alpha / n
            small = size <= lam * n
            bad = np.where(small, (Rq & ~R).any(axis=1), (R & ~Rq).any(axis=1))
            null = np.arange(n) >= k
            qv = np.stack([(Q[:, null] <= t).mean(axis=1) for t in Q_GRID], axis=1) if null.any() else None
            return {
                "bad": np.flatnonzero(bad) + a,
                "fwer_cond": (R[:, null]).any(axis=1),
                "fwer_uncond": (Rq[:, null]).any(axis=1),
                "size": size,
                "qv": qv if qv is not None else np.zeros((b - a, 0)),
            }

        parts = _chunked(chunk, cfg.replicates, cfg.workers)
        for r in _concat(parts, "bad"):
            violations.append((s, int(r), "dominance direction"))
        for name in ("fwer_cond", "fwer_uncond"):
            e = ErrorRateEstimate.from_samples(_concat(parts, name))
            rows.append((label, name, "", e.value, e.mc_se, e.replicates))
        e = ErrorRateEstimate.from_samples(_concat(parts, "size"))
        rows.append((label, "mean_selected", "", e.value, e.mc_se, e.replicates))
        qv = _concat(parts, "qv")
        for j, t in enumerate(Q_GRID[: qv.shape[1]]):
            e = ErrorRateEstimate.from_samples(qv[:, j])
            rows.append((label, "q_null_cdf", t, e.value, e.mc_se, e.replicates))
    return SuiteResult("datasplit", ("scenario", "quantity", "t", "value", "mc_se", "replicates"),
                       rows, violations)


# --- directional ----------------------------------------------------------------------


def run_directional_suite(cfg: ExperimentConfig) -> SuiteResult:
    if cfg.name != "directional":
        raise ContractViolation("expected a directional config")
    dcfg = datasplit.DirectionalConfig(float(cfg.get("delta")), cfg.alpha)
    d = dcfg.delta
    rows, violations = [], []
    for s, mult in enumerate((-2, -1, 0, 1, 2)):
        mu = mult * d

        def chunk(a, b, s=s, mu=mu):
            x = mu + _normals(cfg.seed, _stream_ids(s, a, b), 2)
            c1, c2 = datasplit.directional_batch(x[:, 0], x[:, 1], dcfg, improved=False)
            i1, i2 = datasplit.directional_batch(x[:, 0], x[:, 1], dcfg, improved=True)
            return {"c": np.column_stack((c1, c2)), "i": np.column_stack((i1, i2))}

        parts = _chunked(chunk, cfg.replicates, cfg.workers)
        null = np.array([mu >= -d, mu <= d])
        cond, imp = _concat(parts, "c"), _concat(parts, "i")
        for r in np.flatnonzero((cond & ~imp).any(axis=1)):
            violations.append((s, int(r), "improved misses a conditional rejection"))
        for proc, R in (("conditional", cond), ("improved", imp)):
            e = ErrorRateEstimate.from_samples((R & null).any(axis=1))
            rows.append((mu, proc, e.value, e.mc_se, e.replicates))
    return SuiteResult("directional", ("mu", "procedure", "fwer", "mc_se", "replicates"), rows, violations)


SUITES = {
    "winner": run_winner_experiment,
    "liu_example": run_liu_example,
    "toy": run_toy_suite,
    "datasplit": run_datasplit_suite,
    "directional": run_directional_suite,
}


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    return SUITES[cfg.name](cfg)
