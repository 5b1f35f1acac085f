"""Monte Carlo experiment runner.

Two studies are supported:

* a regime comparison, fitting a stump to replicated datasets from a fixed
  sigmoid curve and comparing the normalised estimates with the slow,
  intermediate and fast limit laws (QQ tables and KS distances), and
* the subsampling study: rate estimation and interval coverage for
  ``alpha_n = n^gamma`` across several ``gamma``.

Configuration files are flat ``key = value`` text, e.g.::

    signal.kind = logistic
    signal.M = 1000
    covariate.inner_lo = 0.45
    covariate.inner_hi = 0.55
    covariate.inner_density = 8
    theta0 = 0.5
    sigma = 0.6
    alpha = 1
    sample_sizes = 50, 100, 1000, 4000
    replicates = 500
    limit_draws = 2000
    seed = 2024
    output_dir = out/scenario1

Lists are comma separated.  ``signal.M`` may list several curves, each
giving its own set of cells.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _streams
from .errors import CPMisspecError, ConfigurationError, ResumeError
from .estimator import make_fitter
from .inference import SubsampleConfig, coverage_experiment, rate_exponent, rate_study
from .limits import (ChernoffSpec, chernoff_spec, ks_statistic, sample_chernoff_argmax,
                     sample_compound_argmin, spec_fast, spec_lambda_c)
from .model import (ModelSpec, builtin_logistic, builtin_normal_cdf,
                    builtin_piecewise_uniform, generate_dataset)
from .population import asymptotic_constants, fixed_function_constants, solve_population

REGIMES = ("slow", "intermediate", "fast")
_REGIME_CODE = {"slow": 0, "intermediate": 1, "fast": 2}
SIGNALS = {"logistic": builtin_logistic, "normal_cdf": builtin_normal_cdf,
           "probit": builtin_normal_cdf}
DEFAULT_GRID = tuple(round(0.01 * k, 2) for k in range(1, 100))


@dataclass
class ExperimentConfig:
    signal_kind: str = "logistic"
    M: tuple = (1.0,)
    inner_lo: float = 0.0
    inner_hi: float = 1.0
    inner_density: float = 1.0
    theta0: float = 0.5
    sigma: float = 1.0
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    sample_sizes: tuple = (100,)
    replicates: int = 100
    regimes: tuple = REGIMES
    limit_draws: int = 2000
    seed: int = 0
    output_dir: Optional[str] = None
    scenario: str = "custom"
    fitter: str = "stump"
    levels: tuple = (0.0, 1.0)
    quantile_grid: tuple = DEFAULT_GRID
    chernoff_delta: float = 1e-3
    chernoff_half_width: float = 4.0
    # subsampling study
    study: str = "regimes"
    gammas: tuple = ()
    n: Optional[int] = None
    n_datasets: int = 100
    n1: int = 100
    n2: int = 200
    r: int = 1000
    n_groups: int = 1
    ci_subsamples: Optional[int] = None
    ci_index: int = 1
    nominal_level: float = 0.95
    coverage: bool = True

    def __post_init__(self):
        self.M = tuple(float(m) for m in self.M)
        self.sample_sizes = tuple(int(n) for n in self.sample_sizes)
        self.regimes = tuple(self.regimes)
        self.gammas = tuple(float(g) for g in self.gammas)
        self.levels = tuple(float(v) for v in self.levels)
        self.quantile_grid = tuple(float(p) for p in self.quantile_grid)
        if self.replicates < 2:
            raise ConfigurationError("replicates must be at least 2")
        if not self.sample_sizes or any(b <= a for a, b in zip(self.sample_sizes, self.sample_sizes[1:])):
            raise ConfigurationError("sample_sizes must be nonempty and increasing")
        bad = set(self.regimes) - set(REGIMES)
        if bad:
            raise ConfigurationError(f"unknown regimes {sorted(bad)}")
        if self.signal_kind not in SIGNALS:
            raise ConfigurationError(f"unknown signal kind {self.signal_kind!r}")
        if self.study not in ("regimes", "subsampling"):
            raise ConfigurationError(f"unknown study {self.study!r}")
        if self.study == "subsampling" and not self.gammas and self.gamma is None:
            raise ConfigurationError("the subsampling study needs gamma or gammas")

    def model(self, M: Optional[float] = None, gamma: Optional[float] = None,
              alpha: Optional[float] = None) -> ModelSpec:
        """Model for one curve; explicit ``gamma`` or ``alpha`` override the config."""
        signal = SIGNALS[self.signal_kind](self.M[0] if M is None else M)
        cov = builtin_piecewise_uniform(self.inner_lo, self.inner_hi, self.inner_density)
        if gamma is None and alpha is None:
            gamma, alpha = self.gamma, self.alpha
        return ModelSpec(signal, self.theta0, self.sigma, cov, alpha=alpha, gamma=gamma)

    def subsample_config(self, n: int) -> SubsampleConfig:
        return SubsampleConfig.for_sizes(n, self.n1, self.n2, r=self.r,
                                         nominal_level=self.nominal_level,
                                         ci_index=self.ci_index, n_groups=self.n_groups,
                                         ci_subsamples=self.ci_subsamples)

    def make_fitter(self):
        return make_fitter(self.fitter, self.levels)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    def fingerprint(self) -> str:
        """Hash of every setting that affects results (not the output path)."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


_KEYS = {
    "signal.kind": ("signal_kind", str), "signal.m": ("M", "floats"),
    "covariate.inner_lo": ("inner_lo", float), "covariate.inner_hi": ("inner_hi", float),
    "covariate.inner_density": ("inner_density", float),
    "theta0": ("theta0", float), "sigma": ("sigma", float),
    "alpha": ("alpha", float), "gamma": ("gamma", float),
    "sample_sizes": ("sample_sizes", "ints"), "replicates": ("replicates", int),
    "regimes": ("regimes", "strs"), "limit_draws": ("limit_draws", int),
    "seed": ("seed", int), "output_dir": ("output_dir", str),
    "scenario": ("scenario", str), "fitter": ("fitter", str), "levels": ("levels", "floats"),
    "quantile_grid": ("quantile_grid", "floats"),
    "chernoff.delta": ("chernoff_delta", float),
    "chernoff.half_width": ("chernoff_half_width", float),
    "study": ("study", str), "gammas": ("gammas", "floats"), "n": ("n", int),
    "n_datasets": ("n_datasets", int), "n1": ("n1", int), "n2": ("n2", int),
    "r": ("r", int), "n_groups": ("n_groups", int), "ci_subsamples": ("ci_subsamples", int),
    "ci_index": ("ci_index", int), "nominal_level": ("nominal_level", float),
    "coverage": ("coverage", "bool"),
}


def _convert(raw: str, kind):
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if kind == "floats":
        return tuple(float(s) for s in items)
    if kind == "ints":
        return tuple(int(s) for s in items)
    if kind == "strs":
        return tuple(items)
    if kind == "bool":
        low = raw.strip().lower()
        if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
            raise ValueError(raw)
        return low in ("1", "true", "yes", "on")
    return kind(raw.strip())


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse flat ``key = value`` text; ``#`` starts a comment line."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in _KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        name, kind = _KEYS[key]
        try:
            values[name] = _convert(raw, kind)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    if values.get("study") == "subsampling" and "fitter" not in values:
        values["fitter"] = "known_levels"
    return ExperimentConfig(**values)


def load_config(path: str, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


# ---------------------------------------------------------------------------
# QQ tables


@dataclass
class QQTable:
    levels: np.ndarray
    emp_q: np.ndarray
    limit_q: np.ndarray
    regime: str = ""
    normalization: str = ""

    def rows(self):
        return zip(self.levels, self.emp_q, self.limit_q)


def qq_table(sample_a, sample_b, grid=DEFAULT_GRID, regime: str = "",
             normalization: str = "") -> QQTable:
    """Matched left-continuous empirical quantiles of two samples."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ConfigurationError("QQ table needs two nonempty samples")
    p = np.asarray(grid, dtype=float)
    return QQTable(p, np.quantile(a, p, method="inverted_cdf"),
                   np.quantile(b, p, method="inverted_cdf"), regime, normalization)


def _fmt(v) -> str:
    return repr(float(v))


def write_qq(path: str, table: QQTable):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "emp_q", "limit_q"])
        for p, e, q in table.rows():
            w.writerow([_fmt(p), _fmt(e), _fmt(q)])


# ---------------------------------------------------------------------------
# regime comparison


def _fmt_M(M: float) -> str:
    return f"{M:g}"


def _cell_key(scenario, M, n):
    return f"{scenario}|M={_fmt_M(M)}|n={n}"


def regime_limit(cfg: ExperimentConfig, spec: ModelSpec, n: int, regime: str, m: int, seed):
    """Limit sample and normalisation ``(scale, label)`` for one regime at size ``n``.

    With a fixed curve (``alpha`` set) the slow regime is the fixed-function
    Chernoff law of ``n^{1/3}(theta_hat - theta^n)``; with ``alpha_n = n^gamma``
    it is the sequence law of ``n^{1/3} alpha_n^{2/3}(theta_hat - theta^n)``.
    The intermediate law is ``Lambda_c`` with ``c = alpha_n / n``.
    """
    if regime == "slow":
        if spec.gamma is None:
            ff = fixed_function_constants(spec, n)
            cs = ChernoffSpec(ff.a, ff.b)
            scale, label = n ** (1.0 / 3.0), "n^(1/3)"
        else:
            cs = chernoff_spec(asymptotic_constants(spec))
            scale = n ** (1.0 / 3.0) * spec.alpha_n(n) ** (2.0 / 3.0)
            label = "n^(1/3) alpha_n^(2/3)"
        sample = sample_chernoff_argmax(cs, m, seed, cfg.chernoff_delta, cfg.chernoff_half_width)
        return sample.values, scale, label
    const = asymptotic_constants(spec)
    if regime == "fast":
        sample = sample_compound_argmin(spec_fast(const), m, seed, regime="fast")
    else:
        c = spec.alpha_n(n) / n
        sample = sample_compound_argmin(spec_lambda_c(const, spec.signal, c), m, seed,
                                        regime="intermediate")
    return sample.values, float(n), "n"


def _run_cell(cfg: ExperimentConfig, mi: int, ni: int, out_dir: Optional[str]):
    M, n = cfg.M[mi], cfg.sample_sizes[ni]
    spec = cfg.model(M)
    fitter = cfg.make_fitter()
    if cfg.fitter == "stump":
        target = solve_population(spec, n).theta_n
    else:
        target = float(fitter.target(spec, n))
    data_seeds = [_streams.seed_sequence(cfg.seed + k, _streams.HARNESS, mi, ni)
                  for k in range(cfg.replicates)]
    ds = [generate_dataset(spec, n, s) for s in data_seeds]
    est = fitter.fit_batch(np.stack([d.x for d in ds]), np.stack([d.y for d in ds]))
    info = {"scenario": cfg.scenario, "M": M, "n": n, "theta_n": target,
            "data_seeds": {"base": cfg.seed, "replicates": [0, cfg.replicates - 1],
                           "spawn_key": [_streams.HARNESS, mi, ni]},
            "regimes": {}}
    ks = {}
    for regime in cfg.regimes:
        lseed = _streams.seed_sequence(cfg.seed, _streams.HARNESS, mi, ni, 100 + _REGIME_CODE[regime])
        entry = {"limit_seed": _streams.describe(lseed)}
        try:
            lim, scale, label = regime_limit(cfg, spec, n, regime, cfg.limit_draws, lseed)
        except CPMisspecError as exc:
            entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            info["regimes"][regime] = entry
            continue
        norm = scale * (est - target)
        table = qq_table(norm, lim, cfg.quantile_grid, regime, label)
        ks[regime] = ks_statistic(norm, lim)
        entry.update(status="ok", normalization=label, ks=ks[regime])
        if out_dir is not None:
            name = f"qq_{cfg.scenario}_M{_fmt_M(M)}_n{n}_{regime}.csv"
            write_qq(os.path.join(out_dir, name), table)
            entry["file"] = name
        entry["table"] = table
        info["regimes"][regime] = entry
    return info, ks


@dataclass
class RegimeComparison:
    ks: list                      # rows (scenario, M, n, regime, ks)
    cells: dict = field(repr=False)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def ks_value(self, M, n, regime) -> float:
        for row in self.ks:
            if row[1] == float(M) and row[2] == n and row[3] == regime:
                return row[4]
        raise KeyError((M, n, regime))


def _read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def _write_json(path, obj):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _prepare_output(cfg: ExperimentConfig, resume: bool):
    out = cfg.output_dir
    if out is None:
        return None, {}
    os.makedirs(out, exist_ok=True)
    mpath = os.path.join(out, "manifest.json")
    if not os.path.exists(mpath):
        return mpath, {}
    old = _read_manifest(mpath)
    if not resume:
        raise ResumeError(f"{out} already holds results; pass resume to continue them")
    if old.get("fingerprint") != cfg.fingerprint():
        raise ResumeError(f"{out} holds results from a different configuration")
    return mpath, old.get("cells", {})


def run_regime_comparison(cfg: ExperimentConfig, resume: bool = False) -> RegimeComparison:
    """Fit replicates in every (M, n) cell and compare with each limit law.

    A cell (or regime within it) that fails is recorded and the run goes
    on.  With an ``output_dir`` the QQ tables, ``ks_summary.csv`` and
    ``manifest.json`` are written there; ``resume`` reuses completed cells
    of an earlier run with an identical configuration.
    """
    mpath, done = _prepare_output(cfg, resume)
    cells, failures, ks_rows = {}, [], []
    for mi, M in enumerate(cfg.M):
        for ni, n in enumerate(cfg.sample_sizes):
            key = _cell_key(cfg.scenario, M, n)
            prev = done.get(key)
            if prev is not None and prev.get("status") == "ok" and all(
                    os.path.exists(os.path.join(cfg.output_dir, r["file"]))
                    for r in prev["regimes"].values() if "file" in r):
                info = prev
            else:
                try:
                    info, _ = _run_cell(cfg, mi, ni, cfg.output_dir)
                    bad = [r for r, e in info["regimes"].items() if e["status"] != "ok"]
                    info["status"] = "failed" if bad else "ok"
                except CPMisspecError as exc:
                    info = {"scenario": cfg.scenario, "M": M, "n": n, "status": "failed",
                            "error": f"{type(exc).__name__}: {exc}", "regimes": {}}
            # config order, not manifest (sorted-key) order
            for regime in cfg.regimes:
                entry = info["regimes"].get(regime)
                if entry is None:
                    continue
                if entry.get("status") == "ok":
                    ks_rows.append((cfg.scenario, M, n, regime, entry["ks"]))
                else:
                    failures.append((key, regime, entry.get("error")))
            if info.get("error"):
                failures.append((key, None, info["error"]))
            cells[key] = info
            if mpath is not None:
                _write_json(mpath, _manifest(cfg, cells))
    if cfg.output_dir is not None:
        with open(os.path.join(cfg.output_dir, "ks_summary.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scenario", "M", "n", "regime", "ks"])
            for s, M, n, regime, v in ks_rows:
                w.writerow([s, _fmt_M(M), n, regime, _fmt(v)])
        _write_json(mpath, _manifest(cfg, cells))
    return RegimeComparison(ks_rows, cells, failures)


def _manifest(cfg, cells):
    clean = {}
    files = ["ks_summary.csv"]
    for key, info in cells.items():
        c = {k: v for k, v in info.items() if k != "regimes"}
        c["regimes"] = {r: {k: v for k, v in e.items() if k != "table"}
                        for r, e in info["regimes"].items()}
        files.extend(e["file"] for e in c["regimes"].values() if "file" in e)
        clean[key] = c
    return {"config": cfg.to_dict(), "fingerprint": cfg.fingerprint(), "cells": clean,
            "files": files}


# ---------------------------------------------------------------------------
# subsampling study


def run_section5(cfg: ExperimentConfig) -> list:
    """Rate estimation and (optionally) coverage for every ``gamma``.

    Returns one dict per ``gamma`` with both ``zeta`` and the rate exponent
    ``(1 + 2 zeta)/3``, true and estimated.  Writes ``subsampling_summary.csv``
    when an output directory is configured.
    """
    n = cfg.n if cfg.n is not None else cfg.sample_sizes[-1]
    gammas = cfg.gammas or (cfg.gamma,)
    sub = cfg.subsample_config(n)
    fitter = cfg.make_fitter()
    rows = []
    for gi, g in enumerate(gammas):
        spec = cfg.model(gamma=g)
        seed = cfg.seed + 1_000_003 * gi
        z_true = min(g, 1.0)
        row = {"gamma": g, "zeta_true": z_true, "rate_exponent_true": rate_exponent(z_true),
               "n": n, "n1": cfg.n1, "n2": cfg.n2}
        if cfg.coverage:
            rep = coverage_experiment(spec, sub, n, cfg.n_datasets, seed, fitter)
            row.update(rep.summary())
        else:
            est = rate_study(spec, sub, n, cfg.n_datasets, seed, fitter)
            z = float(np.median([e.zeta_hat for e in est]))
            row.update(median_zeta=z, median_rate_exponent=rate_exponent(z),
                       n_datasets=len(est), failures=0)
        rows.append(row)
    if cfg.output_dir is not None:
        os.makedirs(cfg.output_dir, exist_ok=True)
        cols = list(rows[0].keys())
        with open(os.path.join(cfg.output_dir, "subsampling_summary.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
        _write_json(os.path.join(cfg.output_dir, "subsampling_manifest.json"),
                    {"config": cfg.to_dict(), "fingerprint": cfg.fingerprint(),
                     "files": ["subsampling_summary.csv"],
                     "seeds": {str(g): cfg.seed + 1_000_003 * i for i, g in enumerate(gammas)}})
    return rows


def scenario_config(scenario: int, M, sample_sizes=(50, 100, 1000, 4000), replicates=500,
                    limit_draws=2000, seed=0, output_dir=None) -> ExperimentConfig:
    """The two piecewise-uniform designs with the sigmoid curve and sigma 0.6."""
    lo, hi, d = {1: (0.45, 0.55, 8.0), 2: (0.4, 0.6, 4.0)}[scenario]
    return ExperimentConfig(M=tuple(np.atleast_1d(M)), inner_lo=lo, inner_hi=hi, inner_density=d,
                            theta0=0.5, sigma=0.6, alpha=1.0, sample_sizes=sample_sizes,
                            replicates=replicates, limit_draws=limit_draws, seed=seed,
                            output_dir=output_dir, scenario=f"s{scenario}")


def subsampling_config(gammas, n, n_datasets, n1=100, n2=200, r=1000, n_groups=1,
                    ci_subsamples=None, coverage=True, seed=0, output_dir=None) -> ExperimentConfig:
    """Logistic curve ``alpha_n = n^gamma``, sigma 1.8, uniform covariate, known levels."""
    return ExperimentConfig(M=(1.0,), sigma=1.8, gamma=float(gammas[0]), gammas=tuple(gammas),
                            sample_sizes=(n,), n=n, n_datasets=n_datasets, n1=n1, n2=n2, r=r,
                            n_groups=n_groups, ci_subsamples=ci_subsamples, coverage=coverage,
                            seed=seed, output_dir=output_dir, study="subsampling",
                            fitter="known_levels")
