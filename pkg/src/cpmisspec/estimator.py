"""Exact least-squares fits of the stump working model.

Two fitters are provided:

* :func:`fit_stump` estimates ``(theta, beta_l, beta_u)`` jointly.
* :func:`fit_theta_known_levels` estimates ``theta`` alone with the levels
  fixed, by minimising the partial sums of ``y - (beta_l + beta_u) / 2``.

Both return the *smallest* minimiser: the residual criterion is piecewise
constant between order statistics, and the left endpoint of the
minimising interval (an order statistic) is reported.  Both run in
``O(n log n)`` via a sort and prefix sums.  Batched variants operate on
``(r, m)`` arrays of subsamples and are used by the subsampling code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateDesignError
from .model import Dataset

# offset of the "below all data" candidate for the known-levels fit
BELOW_DATA_GAP = 2.0 ** -26


@dataclass(frozen=True)
class StumpFit:
    theta_hat: float
    beta_l_hat: float
    beta_u_hat: float
    rss: float
    n_left: int


def _sorted(data: Dataset):
    order = np.argsort(data.x, kind="stable")
    return data.x[order], data.y[order]


def _split_criterion(xs, ys):
    """RSS at each admissible split of sorted data.

    Returns ``(k, rss)`` where ``k`` is the number of points on the left; only
    splits that separate distinct x values and leave both sides non-empty
    are included, in increasing order of the split location.
    """
    n = xs.size
    yc = ys - ys.mean()
    total = float(np.dot(yc, yc))
    prefix = np.cumsum(yc)[:-1]
    k = np.arange(1, n)
    admissible = xs[1:] > xs[:-1]
    k, prefix = k[admissible], prefix[admissible]
    # RSS(k) = T - S_k^2 n / (k (n - k)) for centred y
    rss = total - prefix * prefix * n / (k * (n - k))
    return k, rss


def rss_profile(data: Dataset) -> np.ndarray:
    """RSS of the best stump at every admissible split.

    Returns an ``(m, 2)`` array of ``(split x value, rss)`` rows in increasing
    split order, where the split value is the largest x on the left side.
    """
    xs, ys = _sorted(data)
    if xs[0] == xs[-1]:
        raise DegenerateDesignError("all covariate values are identical")
    k, rss = _split_criterion(xs, ys)
    return np.column_stack([xs[k - 1], rss])


def fit_stump(data: Dataset) -> StumpFit:
    """Least-squares stump fit, smallest argmin on ties."""
    xs, ys = _sorted(data)
    if xs[0] == xs[-1]:
        raise DegenerateDesignError("all covariate values are identical")
    k, rss = _split_criterion(xs, ys)
    best = int(np.argmin(rss))
    kl = int(k[best])
    left, right = ys[:kl], ys[kl:]
    bl, bu = float(left.mean()), float(right.mean())
    # the prefix-sum form cancels badly when rss << total, so report a direct sum
    direct = float(np.dot(left - bl, left - bl) + np.dot(right - bu, right - bu))
    return StumpFit(theta_hat=float(xs[kl - 1]), beta_l_hat=bl, beta_u_hat=bu, rss=direct,
                    n_left=kl)


def known_levels_criterion(data: Dataset, beta_l0: float, beta_u0: float):
    """Partial-sum criterion of the known-levels fit.

    Returns ``(candidates, values)``: the candidate split points, starting
    with the below-data sentinel, and ``sum_{x_i <= theta} (y_i - mid)`` at each.
    """
    if not beta_l0 < beta_u0:
        raise ConfigurationError("known levels must satisfy beta_l0 < beta_u0")
    xs, ys = _sorted(data)
    mid = 0.5 * (beta_l0 + beta_u0)
    csum = np.cumsum(ys - mid)
    last_of_group = np.append(xs[1:] > xs[:-1], True)
    cands = np.concatenate([[xs[0] - BELOW_DATA_GAP], xs[last_of_group]])
    vals = np.concatenate([[0.0], csum[last_of_group]])
    return cands, vals


def fit_theta_known_levels(data: Dataset, beta_l0: float, beta_u0: float) -> float:
    """Change-point estimate with the stump levels fixed at known values.

    Minimising ``sum (y - beta_l0)^2 1(x <= theta) + (y - beta_u0)^2 1(x > theta)``
    is equivalent to minimising ``sum_{x_i <= theta} (y_i - (beta_l0 + beta_u0)/2)``.
    The empty-left split is admissible and reported as
    ``min(x) - 2**-26``.
    """
    cands, vals = known_levels_criterion(data, beta_l0, beta_u0)
    return float(cands[int(np.argmin(vals))])


def _sort_rows(X, Y):
    order = np.argsort(X, axis=1, kind="stable")
    return np.take_along_axis(X, order, 1), np.take_along_axis(Y, order, 1)


def fit_stump_batch(X, Y) -> np.ndarray:
    """``theta_hat`` of :func:`fit_stump` for each row of ``(r, m)`` arrays."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    xs, ys = _sort_rows(X, Y)
    r, m = xs.shape
    yc = ys - ys.mean(axis=1, keepdims=True)
    total = np.einsum("ij,ij->i", yc, yc)[:, None]
    prefix = np.cumsum(yc, axis=1)[:, :-1]
    k = np.arange(1, m)
    rss = total - prefix * prefix * m / (k * (m - k))
    rss[xs[:, 1:] <= xs[:, :-1]] = np.inf
    if np.isinf(rss).all(axis=1).any():
        raise DegenerateDesignError("a subsample has identical covariate values")
    best = np.argmin(rss, axis=1)
    return xs[np.arange(r), best]


def fit_theta_known_levels_batch(X, Y, beta_l0: float, beta_u0: float) -> np.ndarray:
    """``theta_bar`` of :func:`fit_theta_known_levels` for each row."""
    if not beta_l0 < beta_u0:
        raise ConfigurationError("known levels must satisfy beta_l0 < beta_u0")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    xs, ys = _sort_rows(X, Y)
    r, m = xs.shape
    csum = np.cumsum(ys - 0.5 * (beta_l0 + beta_u0), axis=1)
    csum[:, :-1][xs[:, 1:] <= xs[:, :-1]] = np.inf
    vals = np.concatenate([np.zeros((r, 1)), csum], axis=1)
    best = np.argmin(vals, axis=1)
    cands = np.concatenate([xs[:, :1] - BELOW_DATA_GAP, xs], axis=1)
    return cands[np.arange(r), best]


class StumpFitter:
    """Three-parameter fitter, reporting the change-point estimate."""

    name = "stump"

    def fit(self, data: Dataset) -> float:
        return fit_stump(data).theta_hat

    def fit_batch(self, X, Y) -> np.ndarray:
        return fit_stump_batch(X, Y)

    def target(self, spec, n):
        """Population change point estimated by this fitter at size ``n``."""
        from .population import solve_population
        return solve_population(spec.at(n)).theta_n


class KnownLevelsFitter:
    """One-parameter fitter with fixed levels ``(beta_l0, beta_u0)``."""

    name = "known_levels"

    def __init__(self, beta_l0: float = 0.0, beta_u0: float = 1.0):
        if not beta_l0 < beta_u0:
            raise ConfigurationError("known levels must satisfy beta_l0 < beta_u0")
        self.beta_l0 = float(beta_l0)
        self.beta_u0 = float(beta_u0)

    def fit(self, data: Dataset) -> float:
        return fit_theta_known_levels(data, self.beta_l0, self.beta_u0)

    def fit_batch(self, X, Y) -> np.ndarray:
        return fit_theta_known_levels_batch(X, Y, self.beta_l0, self.beta_u0)

    def target(self, spec, n):
        # population minimiser of P[(Y - mid) 1(X <= theta)]: f_n(theta) = mid
        mid = 0.5 * (self.beta_l0 + self.beta_u0)
        return spec.theta0 + float(spec.signal.inverse(mid)) / spec.alpha_n(n)


def make_fitter(name: str, levels=(0.0, 1.0)):
    if name in ("stump", "three", "3"):
        return StumpFitter()
    if name in ("known_levels", "known-levels", "one", "1"):
        return KnownLevelsFitter(*levels)
    raise ConfigurationError(f"unknown fitter {name!r}")
