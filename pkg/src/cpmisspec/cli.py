"""Command line interface.

Subcommands::

    experiment    run the study described by a config file
    fit           stump fit of a two-column x,y CSV
    population    population parameters and asymptotic constants
    limit-sample  draws from a limit law
    subsample-ci  rate estimate and interval for one dataset
    coverage      coverage study from a config file

Results go to standard output as JSON (draws one per line).  Exit status
is 0 on success, 1 when some experiment cell failed and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import CPMisspecError
from .estimator import KnownLevelsFitter, fit_stump, fit_theta_known_levels
from .harness import (ExperimentConfig, load_config, run_regime_comparison, run_section5)
from .inference import build_ci, estimate_zeta
from .limits import (chernoff_spec, sample_chernoff_argmax, sample_compound_argmin,
                     spec_fast, spec_intermediate, spec_lambda_c)
from .model import Dataset
from .population import asymptotic_constants, solve_population


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _clean(obj):
    # JSON has no NaN/inf
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(obj, out=None):
    text = json.dumps(_clean(obj), indent=2, default=_json_default)
    (out or sys.stdout).write(text + "\n")


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config, seed=getattr(args, "seed", None))
    kw = {} if getattr(args, "seed", None) is None else {"seed": args.seed}
    return ExperimentConfig(alpha=1.0, **kw)


def read_dataset(path: str) -> Dataset:
    """Read a CSV with header ``x,y``."""
    arr = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    names = arr.dtype.names or ()
    if "x" not in names or "y" not in names:
        raise CPMisspecError(f"{path}: expected a header with columns x,y")
    return Dataset(np.atleast_1d(arr["x"]), np.atleast_1d(arr["y"]))


def cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if cfg.study == "subsampling":
        _emit({"rows": run_section5(cfg)})
        return 0
    res = run_regime_comparison(cfg, resume=args.resume)
    _emit({"ks": [dict(zip(("scenario", "M", "n", "regime", "ks"), r)) for r in res.ks],
           "failures": [list(f) for f in res.failures], "output_dir": cfg.output_dir})
    return 0 if res.ok else 1


def cmd_fit(args) -> int:
    data = read_dataset(args.data)
    if args.known_levels is not None:
        bl, bu = args.known_levels
        _emit({"theta_hat": fit_theta_known_levels(data, bl, bu), "beta_l": bl, "beta_u": bu})
        return 0
    fit = fit_stump(data)
    _emit({"theta_hat": fit.theta_hat, "beta_l_hat": fit.beta_l_hat,
           "beta_u_hat": fit.beta_u_hat, "rss": fit.rss, "n_left": fit.n_left})
    return 0


def cmd_population(args) -> int:
    cfg = _config(args)
    if args.alpha is not None:
        spec = cfg.model(alpha=args.alpha)
        n = None
    else:
        spec = cfg.model()
        n = args.n
    sol = solve_population(spec, n)
    const = asymptotic_constants(spec)
    out = {"population": {"theta_n": sol.theta_n, "beta_l_n": sol.beta_l_n,
                          "beta_u_n": sol.beta_u_n, "xi_n": sol.xi_n,
                          "criterion_value": sol.criterion_value, "alpha_n": sol.alpha,
                          "iterations": sol.iterations},
           "constants": {k: v for k, v in vars(const).items()},
           "level_bias_limits": const.level_bias_limits(),
           "slow_regime_defined": const.slow_regime_defined}
    _emit(out)
    return 0


def cmd_limit_sample(args) -> int:
    cfg = _config(args)
    spec = cfg.model() if (cfg.alpha is not None or cfg.gamma is not None) else cfg.model(alpha=1.0)
    const = asymptotic_constants(spec)
    seed = cfg.seed if args.seed is None else args.seed
    if args.regime == "slow":
        sample = sample_chernoff_argmax(chernoff_spec(const, one_parameter=args.one_parameter),
                                        args.m, seed, cfg.chernoff_delta, cfg.chernoff_half_width)
    elif args.regime == "fast":
        sample = sample_compound_argmin(spec_fast(const), args.m, seed, prefactor=args.prefactor,
                                        regime="fast")
    elif args.regime == "intermediate":
        sample = sample_compound_argmin(spec_intermediate(const, spec.signal), args.m, seed,
                                        regime="intermediate")
    else:
        if args.c is None:
            raise CPMisspecError("--c is required for the lambda-c regime")
        sample = sample_compound_argmin(spec_lambda_c(const, spec.signal, args.c), args.m, seed,
                                        regime="lambda_c")
    lines = "\n".join(repr(float(v)) for v in sample.values) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    return 0


def _fitter(cfg, name):
    if name == "known_levels" or (name is None and cfg.fitter == "known_levels"):
        return KnownLevelsFitter(*cfg.levels)
    return None


def cmd_subsample_ci(args) -> int:
    cfg = _config(args)
    data = read_dataset(args.data)
    sub = cfg.subsample_config(data.n)
    fitter = _fitter(cfg, args.fitter)
    seed = cfg.seed
    rate = estimate_zeta(data, sub, fitter, seed)
    ci = build_ci(data, sub, rate, fitter, seed)
    _emit({"rate": {"zeta_hat": rate.zeta_hat, "raw_zeta": rate.raw_zeta,
                    "rate_exponent": rate.rate_exponent, "dev1": rate.dev1, "dev2": rate.dev2,
                    "n1": rate.n1, "n2": rate.n2, "group_raw": list(rate.group_raw)},
           "interval": {"lower": ci.lower, "upper": ci.upper, "theta_hat": ci.theta_hat,
                        "zeta_used": ci.zeta_used, "quantiles": list(ci.quantiles),
                        "nominal_level": sub.nominal_level}})
    return 0


def cmd_coverage(args) -> int:
    cfg = _config(args)
    cfg.study = "subsampling"
    cfg.coverage = True
    if args.output_dir:
        cfg.output_dir = args.output_dir
    _emit({"rows": run_section5(cfg)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpmisspec",
                                description="Stump change-point fits under mis-specification.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("experiment", help="run the study described by a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--output-dir")
    e.add_argument("--resume", action="store_true",
                   help="continue an earlier run with the same configuration")
    e.set_defaults(func=cmd_experiment)

    f = sub.add_parser("fit", help="stump fit of an x,y CSV")
    f.add_argument("data")
    f.add_argument("--known-levels", nargs=2, type=float, metavar=("BETA_L", "BETA_U"))
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("population", help="population parameters and constants")
    q.add_argument("--config")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=float)
    g.add_argument("--n", type=int, help="sample size, with gamma from the config")
    q.set_defaults(func=cmd_population)

    s = sub.add_parser("limit-sample", help="draws from a limit law")
    s.add_argument("--config")
    s.add_argument("--regime", required=True,
                   choices=["slow", "intermediate", "fast", "lambda-c"])
    s.add_argument("--c", type=float)
    s.add_argument("--m", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("--prefactor", type=float, default=1.0,
                   help="multiplier for fast-regime draws")
    s.add_argument("--one-parameter", action="store_true",
                   help="slow regime with known levels")
    s.add_argument("--out")
    s.set_defaults(func=cmd_limit_sample)

    c = sub.add_parser("subsample-ci", help="rate estimate and interval for a dataset")
    c.add_argument("data")
    c.add_argument("--config")
    c.add_argument("--seed", type=int)
    c.add_argument("--fitter", choices=["stump", "known_levels"])
    c.set_defaults(func=cmd_subsample_ci)

    v = sub.add_parser("coverage", help="coverage study from a config file")
    v.add_argument("--config", required=True)
    v.add_argument("--seed", type=int)
    v.add_argument("--output-dir")
    v.set_defaults(func=cmd_coverage)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CPMisspecError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
