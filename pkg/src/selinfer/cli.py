"""Command-line front end.

Exit codes: 0 success, 2 usage or parameter error, 3 a per-replicate
assertion failed, 4 unreadable or invalid data, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import datasplit, lasso, simlab, winner
from .core import ContractViolation, InputDataError, NumericalError, PVector
from .toy import ToyConfig, ToyVariant, toy_reject
from .kernels import toy_reject_batch

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_ASSERT, EXIT_DATA = 0, 1, 2, 3, 4
DEFAULT_SEED = 0
SUITE_NAMES = {"winner": "winner", "liu-example": "liu_example", "toy": "toy",
               "datasplit": "datasplit", "directional": "directional"}


class UsageError(Exception):
    pass


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    if "," in val:
        return key, tuple(_float_list(val))
    for conv in (int, float):
        try:
            return key, conv(val)
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}")


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selinfer", allow_abbrev=False,
                                description="Selective and conditional multiple testing tools.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("toy", allow_abbrev=False, help="two-hypothesis toy procedures")
    t.add_argument("--p1", type=float)
    t.add_argument("--p2", type=float)
    t.add_argument("--lambda", dest="lam", type=float, default=0.7)
    t.add_argument("--alpha", type=float, default=0.3)
    t.add_argument("--variant", choices=[v.cli_name for v in ToyVariant])
    t.add_argument("--grid", type=int, help="write an N x N region grid for every variant")
    t.add_argument("--out")

    w = sub.add_parser("winner", allow_abbrev=False, help="inference on the smallest p-value")
    w.add_argument("--p", type=_float_list, required=True, help="comma-separated p-values")
    w.add_argument("--alpha", type=float, default=0.05)
    w.add_argument("--procedure", choices=list("ABCD"), default="A")

    d = sub.add_parser("datasplit", allow_abbrev=False, help="split-sample Bonferroni procedures")
    d.add_argument("--p1", type=_float_list, required=True, help="selection-half p-values")
    d.add_argument("--p2", type=_float_list, required=True, help="inference-half p-values")
    d.add_argument("--lambda", dest="lam", type=float, default=0.5)
    d.add_argument("--alpha", type=float, default=0.05)

    las = sub.add_parser("lasso", allow_abbrev=False, help="lasso inference conditional on selection")
    las.add_argument("--data", required=True)
    las.add_argument("--response", required=True)
    g = las.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--path", nargs=3, metavar=("LMIN", "LMAX", "STEPS"))
    las.add_argument("--level", type=float, default=0.9)
    las.add_argument("--sigma2", type=float)
    las.add_argument("--no-standardize", dest="standardize", action="store_false")
    las.add_argument("--drop", action="append", default=[], metavar="COL")
    las.add_argument("--out")

    s = sub.add_parser("sim", allow_abbrev=False, help="run a Monte Carlo suite")
    s.add_argument("--suite", required=True, choices=list(SUITE_NAMES))
    s.add_argument("--seed", type=_seed)
    s.add_argument("--reps", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out")

    c = sub.add_parser("calibrate", allow_abbrev=False, help="calibrated level of the directional example")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--delta", type=float, required=True)
    return p


# --- commands -----------------------------------------------------------------------


def cmd_toy(args) -> int:
    cfg = ToyConfig(args.lam, args.alpha)
    if args.grid is not None:
        if args.p1 is not None or args.p2 is not None or args.variant is not None:
            raise UsageError("--grid cannot be combined with --p1/--p2/--variant")
        if args.grid < 1:
            raise UsageError("--grid needs a positive size")
        pts = (np.arange(args.grid) + 0.5) / args.grid
        p1, p2 = (x.ravel() for x in np.meshgrid(pts, pts, indexing="ij"))
        rows = []
        for v in ToyVariant:
            cfg.check(v)
            r1, r2 = toy_reject_batch(p1, p2, cfg.lam, cfg.alpha, int(v))
            labels = np.array(["{}", "{1}", "{2}", "{1,2}"])[r1.astype(int) + 2 * r2.astype(int)]
            rows.extend(zip(p1.tolist(), p2.tolist(), [v.cli_name] * p1.size, labels.tolist()))
        _write(simlab.rows_to_csv(("p1", "p2", "variant", "rejects"), rows), args.out)
        return EXIT_OK
    if args.p1 is None or args.p2 is None or args.variant is None:
        raise UsageError("single evaluation needs --p1, --p2 and --variant (or use --grid)")
    R = toy_reject(args.p1, args.p2, cfg, ToyVariant.from_name(args.variant))
    print(f"R={R}")
    return EXIT_OK


def cmd_winner(args) -> int:
    p = PVector(args.p)
    if args.procedure == "D":
        print(f"R={winner.procedure_d(p, args.alpha)}")
        return EXIT_OK
    proc = {"A": winner.procedure_a, "B": winner.procedure_b, "C": winner.procedure_c}[args.procedure]
    res = proc(p, args.alpha)
    print(f"winner={res.winner}")
    print(f"adjusted_p={simlab.format_value(res.adjusted_p_winner)}")
    print(f"R={res.rejected}")
    return EXIT_OK


def cmd_datasplit(args) -> int:
    if len(args.p1) != len(args.p2):
        raise UsageError("--p1 and --p2 need the same number of values")
    sp = datasplit.SplitPValues(PVector(args.p1), PVector(args.p2))
    S = datasplit.split_select(sp, args.lam)
    q = datasplit.q_values(sp, args.lam)
    print(f"S={S}")
    print(f"R_conditional={datasplit.split_conditional_reject(sp, S, args.alpha)}")
    print("Q=" + ",".join(simlab.format_value(v) for v in q))
    print(f"R_unconditional={datasplit.split_unconditional_reject(q, args.alpha)}")
    return EXIT_OK


LASSO_COLUMNS = ("variable", "lambda", "selected", "beta_hat", "p_value", "ci_lo", "ci_hi")


def lasso_grid(lmin: float, lmax: float, steps: int) -> list:
    """Log-spaced penalties from ``lmin`` to ``lmax`` inclusive."""
    if steps < 1 or not 0 < lmin <= lmax or (steps == 1 and lmin != lmax):
        raise UsageError("--path needs 0 < LMIN <= LMAX and STEPS >= 1 (LMIN == LMAX when STEPS == 1)")
    if steps == 1:
        return [lmin]
    return np.geomspace(lmin, lmax, steps).tolist()


def cmd_lasso(args) -> int:
    if not 0 < args.level < 1:
        raise UsageError("--level must lie in (0, 1)")
    if args.sigma2 is not None and not args.sigma2 > 0:
        raise UsageError("--sigma2 must be positive")
    if args.lam is not None and not args.lam >= 0:
        raise UsageError("--lambda must be >= 0")
    if args.path is not None:
        try:
            lmin, lmax, steps = float(args.path[0]), float(args.path[1]), int(args.path[2])
        except ValueError:
            raise UsageError("--path expects LMIN LMAX STEPS") from None
        grid = lasso_grid(lmin, lmax, steps)
    data = lasso.load_regression_data(args.data, args.response, sigma2=args.sigma2,
                                      standardize=args.standardize, drop=args.drop)
    if args.path is not None:
        recs = lasso.lambda_path(data, grid, args.level)
        cols = LASSO_COLUMNS + ("active_set_change",)
        rows = [(r.variable, r.lam, r.selected, r.beta_hat, r.p_value, r.ci_lo, r.ci_hi, r.change)
                for r in recs]
    else:
        recs = lasso.single_lambda(data, args.lam, args.level)
        cols = LASSO_COLUMNS
        rows = [(r.variable, r.lam, r.selected, r.beta_hat, r.p_value, r.ci_lo, r.ci_hi) for r in recs]
    _write(simlab.rows_to_csv(cols, rows), args.out)
    if args.out not in (None, "-") and args.lam is not None:
        chosen = [r.variable for r in recs if r.selected]
        print(f"selected {len(chosen)} of {data.m}: {', '.join(chosen)}")
    return EXIT_OK


def cmd_sim(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("SELINFER_SEED")
        try:
            seed = _seed(env) if env else DEFAULT_SEED
        except argparse.ArgumentTypeError as e:
            raise UsageError(f"SELINFER_SEED: {e}") from None
    if args.reps is not None and args.reps < 1:
        raise UsageError("--reps must be positive")
    name = SUITE_NAMES[args.suite]
    cfg = simlab.ExperimentConfig.default(name, seed, args.reps, args.alpha, args.workers, **dict(args.param))
    res = simlab.run_suite(cfg)
    _write(res.to_csv(), args.out)
    out = sys.stdout if args.out not in (None, "-") else sys.stderr
    print(f"suite={args.suite} seed={seed} replicates={cfg.replicates} alpha={cfg.alpha}", file=out)
    if args.out not in (None, "-"):
        print(res.to_csv(), end="", file=out)
    for note in res.notes:
        print(note, file=out)
    if res.violations:
        print(f"{len(res.violations)} per-replicate assertion failure(s):", file=sys.stderr)
        for scen, rep, what in res.violations[:50]:
            print(f"  scenario {scen} replicate {rep}: {what}", file=sys.stderr)
        if len(res.violations) > 50:
            print(f"  ... {len(res.violations) - 50} more", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_calibrate(args) -> int:
    print(f"{datasplit.solve_alpha_prime(args.alpha, args.delta):.6f}")
    return EXIT_OK


COMMANDS = {"toy": cmd_toy, "winner": cmd_winner, "datasplit": cmd_datasplit, "lasso": cmd_lasso,
            "sim": cmd_sim, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ContractViolation) as e:
        parser.print_usage(sys.stderr)
        print(f"selinfer {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InputDataError as e:
        print(f"selinfer {args.command}: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"selinfer {args.command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
