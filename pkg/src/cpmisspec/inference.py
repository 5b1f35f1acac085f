"""Subsampling inference for the change point with an unknown rate.

The estimator converges at ``n^{(1 + 2 zeta)/3}`` with ``zeta = min(gamma, 1)``
when ``alpha_n = n^gamma``.  The procedure

1. draws ``r`` subsamples without replacement at two sizes ``n_1 < n_2``,
2. estimates ``zeta`` by matching mean absolute deviations of the subsample
   estimates around the full-sample estimate,
3. draws a fresh batch of subsamples, normalises their deviations with the
   estimated rate and reads off quantiles,
4. inverts those quantiles into an interval for the population change point.

``zeta`` is reported together with the rate exponent ``(1 + 2 zeta) / 3``;
they are easy to confuse (``zeta = 0.8`` has exponent ``0.867``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _streams
from .errors import (ConfigurationError, DegenerateDeviationError, UnstableQuantileError)
from .estimator import KnownLevelsFitter, StumpFitter
from .model import Dataset, ModelSpec, generate_dataset

MIN_CI_SUBSAMPLES = 20


def rate_exponent(zeta: float) -> float:
    """Convergence-rate exponent ``(1 + 2 zeta) / 3``."""
    return (1.0 + 2.0 * zeta) / 3.0


@dataclass(frozen=True)
class SubsampleConfig:
    """Tuning of the subsampling procedure.

    Subsample sizes are ``n_j = floor(n^{beta_j})``.  ``ci_index`` picks the
    size used for the interval (1 or 2) and ``ci_subsamples`` the number of
    fresh subsamples drawn for it (defaults to ``r``).  With
    ``n_groups > 1``, ``n_groups`` disjoint batches of ``r`` subsamples per
    size each give an estimate and the median is used.
    """

    beta1: float
    beta2: float
    r: int = 1000
    nominal_level: float = 0.95
    ci_index: int = 1
    n_groups: int = 1
    ci_subsamples: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.beta1 < self.beta2 < 1.0:
            raise ConfigurationError("need 0 < beta1 < beta2 < 1")
        if self.r < 2:
            raise ConfigurationError("need at least two subsamples per size")
        if not 0.0 < self.nominal_level < 1.0:
            raise ConfigurationError("nominal level must lie in (0, 1)")
        if self.ci_index not in (1, 2):
            raise ConfigurationError("ci_index must be 1 or 2")
        if self.n_groups < 1:
            raise ConfigurationError("n_groups must be positive")

    @classmethod
    def for_sizes(cls, n: int, n1: int, n2: int, **kw) -> "SubsampleConfig":
        """Config whose exponents reproduce the sizes ``n1 < n2`` at ``n``."""
        if not 1 < n1 < n2 < n:
            raise ConfigurationError("need 1 < n1 < n2 < n")
        return cls(math.log(n1) / math.log(n), math.log(n2) / math.log(n), **kw)

    def sizes(self, n: int):
        # tiny slack so that for_sizes round-trips through floating point
        n1, n2 = (int(math.floor(n ** b * (1.0 + 1e-12))) for b in (self.beta1, self.beta2))
        if not n1 < n2 < n:
            raise ConfigurationError(f"subsample sizes {n1}, {n2} invalid for n = {n}")
        return n1, n2

    @property
    def n_ci(self) -> int:
        return self.r if self.ci_subsamples is None else int(self.ci_subsamples)


@dataclass(frozen=True)
class RateEstimate:
    """Estimated ``zeta`` (clamped to ``[0, 1]``) with its diagnostics.

    With several groups, ``raw_zeta`` is the median of the group values and
    ``dev1``, ``dev2`` are medians of the group deviations.
    """

    zeta_hat: float
    raw_zeta: float
    dev1: float
    dev2: float
    n1: int = 0
    n2: int = 0
    group_raw: tuple = ()

    @property
    def rate_exponent(self) -> float:
        return rate_exponent(self.zeta_hat)

    @classmethod
    def known(cls, zeta: float) -> "RateEstimate":
        """Wrap a known ``zeta`` so it can be fed to :func:`build_ci`."""
        z = float(zeta)
        return cls(min(1.0, max(0.0, z)), z, math.nan, math.nan)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    zeta_used: float
    quantiles: tuple
    theta_hat: float = math.nan

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def zeta_from_deviations(dev1: float, dev2: float, n1: int, n2: int) -> float:
    """Unclamped ``zeta`` solving the moment-matching equation."""
    if not (dev1 > 0 and dev2 > 0):
        raise DegenerateDeviationError(
            "a mean absolute deviation is zero; every subsample reproduces the full-sample estimate")
    expo = (math.log(dev1) - math.log(dev2)) / math.log(n2 / n1)
    return (3.0 * expo - 1.0) / 2.0


def subsample_indices(rng, n: int, size: int, r: int) -> np.ndarray:
    """``r`` index sets of ``size`` distinct elements of ``range(n)``."""
    return np.argpartition(rng.random((r, n)), size - 1, axis=1)[:, :size]


def _fitter(fitter):
    if fitter is None:
        return StumpFitter()
    return fitter


def subsample_estimates(data: Dataset, size: int, r: int, fitter, rng) -> np.ndarray:
    idx = subsample_indices(rng, data.n, size, r)
    return _fitter(fitter).fit_batch(data.x[idx], data.y[idx])


def estimate_zeta(data: Dataset, cfg: SubsampleConfig, fitter=None, seed=0,
                  theta_hat: Optional[float] = None) -> RateEstimate:
    """Estimate ``zeta`` from deviations of subsample fits at two sizes."""
    fitter = _fitter(fitter)
    n1, n2 = cfg.sizes(data.n)
    if n1 < 10:
        raise ConfigurationError(f"smallest subsample size {n1} is below 10")
    if theta_hat is None:
        theta_hat = fitter.fit(data)
    raws, devs = [], []
    for g in range(cfg.n_groups):
        d = []
        for j, size in enumerate((n1, n2)):
            rng = _streams.generator(seed, _streams.RATE_ESTIMATION, g, j)
            est = subsample_estimates(data, size, cfg.r, fitter, rng)
            d.append(float(np.mean(np.abs(est - theta_hat))))
        raws.append(zeta_from_deviations(d[0], d[1], n1, n2))
        devs.append(d)
    raw = float(np.median(raws))
    devs = np.median(np.asarray(devs), axis=0)
    return RateEstimate(min(1.0, max(0.0, raw)), raw, float(devs[0]), float(devs[1]),
                        n1, n2, tuple(raws))


def interval_from_quantiles(theta_hat: float, q_lo: float, q_hi: float, n: int,
                            zeta: float) -> tuple:
    scale = n ** (-rate_exponent(zeta))
    return theta_hat - q_hi * scale, theta_hat - q_lo * scale


def build_ci(data: Dataset, cfg: SubsampleConfig, zeta: RateEstimate, fitter=None, seed=0,
             theta_hat: Optional[float] = None) -> ConfidenceInterval:
    """Interval for the population change point from fresh subsamples."""
    fitter = _fitter(fitter)
    m = cfg.n_ci
    if m < MIN_CI_SUBSAMPLES:
        raise UnstableQuantileError(
            f"{m} subsamples are too few for tail quantiles (need {MIN_CI_SUBSAMPLES})")
    if theta_hat is None:
        theta_hat = fitter.fit(data)
    size = cfg.sizes(data.n)[cfg.ci_index - 1]
    rng = _streams.generator(seed, _streams.CONFIDENCE_INTERVAL)
    est = subsample_estimates(data, size, m, fitter, rng)
    z = zeta.zeta_hat
    dev = size ** rate_exponent(z) * (est - theta_hat)
    a = 1.0 - cfg.nominal_level
    q_lo, q_hi = np.quantile(dev, [a / 2.0, 1.0 - a / 2.0], method="inverted_cdf")
    lo, hi = interval_from_quantiles(theta_hat, float(q_lo), float(q_hi), data.n, z)
    return ConfidenceInterval(lo, hi, z, (float(q_lo), float(q_hi)), float(theta_hat))


@dataclass
class CoverageReport:
    coverage: float
    mean_length: float
    n_datasets: int
    target: float
    zeta_hats: np.ndarray = field(repr=False)
    raw_zetas: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    failures: list = field(default_factory=list)

    @property
    def median_zeta(self) -> float:
        return float(np.median(self.zeta_hats)) if self.zeta_hats.size else math.nan

    def summary(self) -> dict:
        z = self.median_zeta
        return {"coverage": self.coverage, "mean_length": self.mean_length,
                "n_datasets": self.n_datasets, "target": self.target,
                "median_zeta": z, "median_rate_exponent": rate_exponent(z),
                "failures": len(self.failures)}


def coverage_experiment(spec: ModelSpec, cfg: SubsampleConfig, n: int, n_datasets: int,
                        seed: int = 0, fitter=None, zeta: Optional[float] = None) -> CoverageReport:
    """Coverage of the population change point by subsampling intervals.

    Dataset ``i`` is generated with seed ``seed + i``, and its rate
    estimate and interval use streams derived from that same seed.  If
    ``zeta`` is given, rate estimation is skipped and the known value used.
    Datasets whose inference fails are recorded and excluded.
    """
    fitter = _fitter(fitter)
    target = float(fitter.target(spec, n))
    zs, raws, lo, hi, failures = [], [], [], [], []
    for i in range(int(n_datasets)):
        s = seed + i
        data = generate_dataset(spec, n, s)
        th = fitter.fit(data)
        try:
            rate = RateEstimate.known(zeta) if zeta is not None else \
                estimate_zeta(data, cfg, fitter, s, theta_hat=th)
            ci = build_ci(data, cfg, rate, fitter, s, theta_hat=th)
        except (DegenerateDeviationError, UnstableQuantileError) as exc:
            failures.append((s, str(exc)))
            continue
        zs.append(rate.zeta_hat)
        raws.append(rate.raw_zeta)
        lo.append(ci.lower)
        hi.append(ci.upper)
    lo, hi = np.asarray(lo), np.asarray(hi)
    cover = float(np.mean((lo <= target) & (target <= hi))) if lo.size else math.nan
    length = float(np.mean(hi - lo)) if lo.size else math.nan
    return CoverageReport(cover, length, lo.size, target, np.asarray(zs), np.asarray(raws),
                          lo, hi, failures)


def rate_study(spec: ModelSpec, cfg: SubsampleConfig, n: int, n_datasets: int,
               seed: int = 0, fitter=None) -> list:
    """Rate estimates on ``n_datasets`` independent datasets (seeds ``seed + i``)."""
    fitter = _fitter(fitter)
    return [estimate_zeta(generate_dataset(spec, n, seed + i), cfg, fitter, seed + i)
            for i in range(int(n_datasets))]


__all__ = ["SubsampleConfig", "RateEstimate", "ConfidenceInterval", "CoverageReport",
           "estimate_zeta", "build_ci", "coverage_experiment", "rate_exponent",
           "zeta_from_deviations", "subsample_indices", "KnownLevelsFitter", "StumpFitter"]
