"""Command-line front end.

Subcommands: ci (one interval), length-curve and expected-length
(figure-style CSV tables), dominance (design vs splitting table),
lasso-demo (selective CI on a CSV dataset), selfcheck (oracle suite).
Exit codes: 0 success, 2 flag/validation error, 3 numerical
nonconvergence (reachable only in tau2 = 0 limits).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .designs import CarvingDesign, RandResponseDesign
from .distribution import CondNormalFamily
from .experiments import (
    DOMINANCE_HEADER,
    EXPECTED_HEADER,
    LENGTH_HEADER,
    DominanceConfig,
    ExperimentConfig,
    dominance_experiment,
    expected_length_curve,
    length_curve,
    write_csv,
)
from .intervals import NonconvergenceError, QuantilePair, interval, theorem_bound
from .lasso import NoSelectionError, RegressionProblem, load_regression_csv, selective_interval
from .rng import stream
from .selfcheck import run_selfcheck
from .truncation import format_truncation_set, parse_truncation_set

__all__ = ["main", "run"]


class _CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _add_common(p, *, trunc_default="(-1,1)"):
    p.add_argument("--sigma2", type=float, default=1.0, help="variance of the statistic X (default 1.0)")
    p.add_argument("--tau2", type=float, default=1.0, help="randomization variance of U (default 1.0; 0 selects the plain truncated limit)")
    p.add_argument("--trunc", type=str, default=trunc_default, help=f'truncation set, e.g. "(-inf,-2),(2,inf)" (default "{trunc_default}")')
    p.add_argument("--q1", type=float, default=0.025, help="lower quantile level in (0,1) (default 0.025)")
    p.add_argument("--q2", type=float, default=0.975, help="upper quantile level in (0,1) (default 0.975)")
    p.add_argument("--seed", type=int, default=20250809, help="master seed for all randomness (default 20250809)")
    p.add_argument("--out", type=str, default=None, help="write CSV here instead of stdout")


def _build_parser():
    ap = argparse.ArgumentParser(prog="randcond", description="Bounded-length selective confidence intervals from randomized conditional normal laws.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ci", help="one confidence interval from an observed statistic")
    _add_common(p)
    p.add_argument("--x", type=float, required=True, help="observed statistic (required)")

    p = sub.add_parser("length-curve", help="interval length vs x (figure-1 style CSV)")
    _add_common(p)
    p.add_argument("--family", choices=["bounded", "gap", "custom"], default="bounded", help="truncation family: (-a,a), (-inf,-a)u(a,inf), or --trunc as-is (default bounded)")
    p.add_argument("--a", type=str, default="0.5,1,2,3", help="comma-separated a values (default 0.5,1,2,3)")
    p.add_argument("--x-min", type=float, default=-10.0, help="grid start (default -10)")
    p.add_argument("--x-max", type=float, default=10.0, help="grid end (default 10)")
    p.add_argument("--x-step", type=float, default=0.1, help="grid step (default 0.1)")

    p = sub.add_parser("expected-length", help="Monte-Carlo conditional expected length vs mu (figure-2 style CSV)")
    _add_common(p)
    p.add_argument("--family", choices=["bounded", "gap", "custom"], default="bounded", help="truncation family (default bounded)")
    p.add_argument("--a", type=str, default="0.5,1,2,3", help="comma-separated a values (default 0.5,1,2,3)")
    p.add_argument("--mu-min", type=float, default=-10.0, help="grid start (default -10)")
    p.add_argument("--mu-max", type=float, default=10.0, help="grid end (default 10)")
    p.add_argument("--mu-step", type=float, default=0.25, help="grid step (default 0.25)")
    p.add_argument("--replicates", type=int, default=2000, help="Monte-Carlo draws per grid point (default 2000)")
    p.add_argument("--workers", type=int, default=1, help="process workers; output is identical for any count (default 1)")

    p = sub.add_parser("dominance", help="selective vs sample-splitting interval lengths, per replicate")
    _add_common(p, trunc_default="(0,inf)")
    p.add_argument("--design", choices=["carving", "randresp"], required=True, help="which design to compare (required)")
    p.add_argument("--n", type=int, default=100, help="sample size (default 100)")
    p.add_argument("--delta", type=float, default=0.75, help="carving selection fraction in (0,1), delta*n integer (default 0.75)")
    p.add_argument("--mu-true", type=float, default=0.0, help="true mean for the simulation (default 0.0)")
    p.add_argument("--replicates", type=int, default=2000, help="kept Monte-Carlo replicates (default 2000)")

    p = sub.add_parser("lasso-demo", help="Lasso-with-randomized-response selective CI on CSV data")
    p.add_argument("--data", type=str, required=True, help="CSV path: header row, response first column, design after (required)")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="Lasso penalty, > 0 (required, no default)")
    p.add_argument("--tau2", type=float, required=True, help="randomization variance for the selection response (required)")
    p.add_argument("--sigma2", type=float, default=1.0, help="response variance (default 1.0)")
    p.add_argument("--gamma", type=str, required=True, help="contrast: a selected column index, or comma floats of length |model| (required)")
    p.add_argument("--condition-on-signs", action="store_true", help="condition on (model, signs) instead of the model alone")
    p.add_argument("--q1", type=float, default=0.025, help="lower quantile level (default 0.025)")
    p.add_argument("--q2", type=float, default=0.975, help="upper quantile level (default 0.975)")
    p.add_argument("--seed", type=int, default=20250809, help="seed for the randomization draw omega (default 20250809)")
    p.add_argument("--out", type=str, default=None, help="write CSV here instead of stdout")

    p = sub.add_parser("selfcheck", help="run the built-in oracle suite and report pass/fail")
    p.add_argument("--seed", type=int, default=0, help="seed for the randomized checks (default 0)")

    return ap


def _parse_trunc(text):
    try:
        return parse_truncation_set(text)
    except ValueError as exc:
        raise _CliError(f"--trunc: {exc}")


def _parse_pair(args):
    try:
        return QuantilePair(args.q1, args.q2)
    except ValueError as exc:
        raise _CliError(f"--q1/--q2: {exc}")


def _parse_a_values(text):
    try:
        vals = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise _CliError(f"--a: {exc}")
    if not vals:
        raise _CliError("--a: need at least one value")
    return vals


def _grid(lo, hi, step, flag):
    if step <= 0 or hi < lo:
        raise _CliError(f"{flag}: need min <= max and step > 0")
    return tuple(np.round(np.arange(lo, hi + 1e-9, step), 10))


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_ci(args):
    if args.tau2 < 0:
        raise _CliError("--tau2: must be nonnegative")
    if args.sigma2 <= 0:
        raise _CliError("--sigma2: must be positive")
    T = _parse_trunc(args.trunc)
    pair = _parse_pair(args)
    fam = CondNormalFamily(args.sigma2, args.tau2, T)
    ci = interval(fam, args.x, pair)
    rows = [f"lower,upper,length,bound\n{ci.lower:.17g},{ci.upper:.17g},{ci.length:.17g},{ci.bound:.17g}\n"]
    _emit("".join(rows), args.out)
    return 0


def _experiment_config(args, grid_key):
    a_vals = _parse_a_values(args.a)
    custom = _parse_trunc(args.trunc) if args.family == "custom" else None
    kwargs = dict(
        family=args.family,
        a_values=a_vals,
        sigma2=args.sigma2,
        tau2=args.tau2,
        pair=_parse_pair(args),
        master_seed=args.seed,
        custom_T=custom,
    )
    if grid_key == "x":
        kwargs["x_grid"] = _grid(args.x_min, args.x_max, args.x_step, "--x-min/--x-max/--x-step")
    else:
        kwargs["mu_grid"] = _grid(args.mu_min, args.mu_max, args.mu_step, "--mu-min/--mu-max/--mu-step")
        kwargs["replicates"] = args.replicates
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise _CliError(str(exc))


def _cmd_length_curve(args):
    cfg = _experiment_config(args, "x")
    _emit(write_csv(LENGTH_HEADER, length_curve(cfg)), args.out)
    return 0


def _cmd_expected_length(args):
    if args.workers < 1:
        raise _CliError("--workers: must be >= 1")
    cfg = _experiment_config(args, "mu")
    _emit(write_csv(EXPECTED_HEADER, expected_length_curve(cfg, workers=args.workers)), args.out)
    return 0


def _cmd_dominance(args):
    T = _parse_trunc(args.trunc)
    pair = _parse_pair(args)
    try:
        cfg = DominanceConfig(
            n=args.n,
            sigma2=args.sigma2,
            delta=args.delta,
            tau2=args.tau2,
            T=T,
            mu_true=args.mu_true,
            pair=pair,
            replicates=args.replicates,
            master_seed=args.seed,
        )
        if args.design == "carving":
            CarvingDesign(args.n, args.delta, args.sigma2, T)
        else:
            RandResponseDesign(args.n, args.sigma2, args.tau2, T)
        rows = dominance_experiment(args.design, cfg)
    except ValueError as exc:
        raise _CliError(f"--design/--n/--delta/--tau2: {exc}")
    _emit(write_csv(DOMINANCE_HEADER, rows), args.out)
    return 0


def _cmd_lasso_demo(args):
    try:
        A, y = load_regression_csv(args.data)
    except (OSError, ValueError) as exc:
        raise _CliError(f"--data: {exc}")
    try:
        problem = RegressionProblem(A, y, args.sigma2, args.lam, args.tau2)
    except ValueError as exc:
        raise _CliError(f"--lambda/--tau2/--sigma2/--data: {exc}")
    pair = _parse_pair(args)
    rng = stream(args.seed, 0)
    omega = math.sqrt(args.tau2) * rng.standard_normal(len(y))
    gamma = args.gamma
    if "," in gamma:
        gamma_val = np.asarray([float(tok) for tok in gamma.split(",")])
    else:
        try:
            gamma_val = int(gamma)
        except ValueError:
            raise _CliError("--gamma: expected an integer index or comma-separated floats")
    try:
        res = selective_interval(problem, omega, gamma_val, pair, condition_on_signs=args.condition_on_signs)
    except NoSelectionError:
        raise _CliError("--lambda: the lasso selected the empty model at this penalty", code=2)
    except ValueError as exc:
        raise _CliError(f"--gamma: {exc}")
    lines = [
        "key,value\n",
        f"model,{' '.join(str(j) for j in res.selection.model)}\n",
        f"signs,{' '.join('%+d' % int(s) for s in res.selection.signs)}\n",
        f"truncation,\"{format_truncation_set(res.T)}\"\n",
        f"x_obs,{res.x_obs:.17g}\n",
        f"lower,{res.ci.lower:.17g}\n",
        f"upper,{res.ci.upper:.17g}\n",
        f"length,{res.ci.length:.17g}\n",
        f"bound,{res.ci.bound:.17g}\n",
    ]
    _emit("".join(lines), args.out)
    return 0


def _cmd_selfcheck(args):
    results = run_selfcheck(seed=args.seed)
    all_ok = True
    for name, ok, detail in results:
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})\n")
        all_ok &= ok
    return 0 if all_ok else 1


def run(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "ci": _cmd_ci,
        "length-curve": _cmd_length_curve,
        "expected-length": _cmd_expected_length,
        "dominance": _cmd_dominance,
        "lasso-demo": _cmd_lasso_demo,
        "selfcheck": _cmd_selfcheck,
    }
    try:
        return handlers[args.command](args)
    except _CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except NonconvergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
