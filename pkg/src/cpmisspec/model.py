"""Regression model, signal functions, covariate laws and data generation.

The data at sample size ``n`` follow

    Y = f(alpha_n * (X - theta0)) + sigma * eps,

with ``f`` a bounded increasing signal, ``X`` supported on ``[0, 1]`` and
``eps`` standard noise independent of ``X``.  As ``alpha_n`` grows the
regression curve approaches a stump with levels ``f(-inf)`` and ``f(+inf)``
and jump at ``theta0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from . import _streams
from .errors import ConfigurationError

ArrayFunc = Callable[[np.ndarray], np.ndarray]

_INVERSE_XTOL = 1e-12
_DERIV_STEP = 1e-6


def _standard_normal(rng, size):
    return rng.standard_normal(size)


@dataclass(frozen=True, eq=False)
class SignalFunction:
    """A smooth, bounded, strictly increasing link ``f``.

    Parameters
    ----------
    eval : callable
        Vectorised ``t -> f(t)``.
    lower_limit, upper_limit : float
        ``f(-inf)`` and ``f(+inf)``.
    deriv, inverse : callable, optional
        Analytic ``f'`` and ``f^{-1}``.  When omitted, central differences
        (step 1e-6) and a bracketing root finder (xtol 1e-12) are used.
    tail_mass : callable, optional
        ``T -> bound`` on both tail masses ``int_T^inf |f - upper|`` and
        ``int_-inf^-T |f - lower|`` for ``T > 0``.  Needed to certify the
        bias integrals; see :func:`polynomial_tail_certificate`.
    width : float
        Characteristic transition width of ``f`` in ``t`` units.  Only used
        to place quadrature breakpoints.
    name : str
        Label used in reports and configuration round trips.
    """

    eval: ArrayFunc
    lower_limit: float
    upper_limit: float
    deriv: Optional[ArrayFunc] = None
    inverse: Optional[ArrayFunc] = None
    tail_mass: Optional[Callable[[float], float]] = None
    width: float = 1.0
    name: str = "custom"
    params: tuple = field(default=())

    def __post_init__(self):
        if not self.lower_limit < self.upper_limit:
            raise ConfigurationError("signal limits must satisfy lower < upper")
        if not self.width > 0:
            raise ConfigurationError("signal width must be positive")
        if self.deriv is None:
            object.__setattr__(self, "deriv", self._numeric_deriv)
        if self.inverse is None:
            object.__setattr__(self, "inverse", self._numeric_inverse)

    def __call__(self, t):
        return self.eval(t)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower_limit + self.upper_limit)

    @property
    def jump(self) -> float:
        return self.upper_limit - self.lower_limit

    def _numeric_deriv(self, t):
        t = np.asarray(t, dtype=float)
        h = _DERIV_STEP
        return (self.eval(t + h) - self.eval(t - h)) / (2.0 * h)

    def _scalar_inverse(self, y):
        if not self.lower_limit < y < self.upper_limit:
            raise ConfigurationError(f"inverse argument {y} outside the signal range")
        lo, hi = -self.width, self.width
        for _ in range(200):
            if self.eval(lo) < y:
                break
            lo *= 2.0
        for _ in range(200):
            if self.eval(hi) > y:
                break
            hi *= 2.0
        return optimize.brentq(lambda t: float(self.eval(t)) - y, lo, hi,
                               xtol=_INVERSE_XTOL, rtol=4 * np.finfo(float).eps)

    def _numeric_inverse(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return self._scalar_inverse(float(y))
        return np.array([self._scalar_inverse(v) for v in y.ravel()]).reshape(y.shape)


def polynomial_tail_certificate(t0: float, const: float) -> Callable[[float], float]:
    """Tail-mass bound from ``|f(t) - limit| <= const / t**2`` for ``|t| >= t0``."""

    def bound(T):
        if T < t0:
            return np.inf
        return const / T

    return bound


def builtin_logistic(scale: float) -> SignalFunction:
    """Logistic signal ``t -> exp(M t) / (1 + exp(M t))`` with levels 0 and 1."""
    M = float(scale)
    if not M > 0:
        raise ConfigurationError("logistic scale M must be positive")

    def f(t):
        return special.expit(M * np.asarray(t, dtype=float))

    def df(t):
        p = special.expit(M * np.asarray(t, dtype=float))
        return M * p * (1.0 - p)

    def finv(y):
        return special.logit(y) / M

    def tail(T):
        # int_T^inf 1 / (1 + e^{Mt}) dt
        return np.log1p(np.exp(-M * T)) / M

    return SignalFunction(f, 0.0, 1.0, deriv=df, inverse=finv, tail_mass=tail,
                          width=1.0 / M, name="logistic", params=(M,))


def builtin_normal_cdf(scale: float = 1.0) -> SignalFunction:
    """Probit signal ``t -> Phi(s t)`` with levels 0 and 1."""
    s = float(scale)
    if not s > 0:
        raise ConfigurationError("probit scale must be positive")

    def f(t):
        return special.ndtr(s * np.asarray(t, dtype=float))

    def df(t):
        u = s * np.asarray(t, dtype=float)
        return s * np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)

    def finv(y):
        return special.ndtri(y) / s

    def tail(T):
        u = s * T
        phi = np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)
        return max(phi - u * special.ndtr(-u), 0.0) / s

    return SignalFunction(f, 0.0, 1.0, deriv=df, inverse=finv, tail_mass=tail,
                          width=1.0 / s, name="probit", params=(s,))


@dataclass(frozen=True, eq=False)
class CovariateLaw:
    """Distribution of ``X`` on ``[0, 1]``.

    ``breakpoints`` lists the interior points where the density is not
    smooth; quadrature routines split their panels there.
    """

    density: ArrayFunc
    cdf: ArrayFunc
    quantile: ArrayFunc
    breakpoints: tuple = ()
    name: str = "custom"
    params: tuple = ()


def _strictly_increasing(xs, ys):
    ox, oy = [xs[0]], [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        if x > ox[-1]:
            ox.append(x)
            oy.append(y)
    ox[-1] = xs[-1]
    oy[-1] = ys[-1]
    return np.array(ox), np.array(oy)


def builtin_piecewise_uniform(inner_lo: float, inner_hi: float,
                              inner_density: float) -> CovariateLaw:
    """Density ``inner_density`` on ``[inner_lo, inner_hi]``, constant elsewhere.

    The remaining mass ``1 - inner_density * (inner_hi - inner_lo)`` is spread
    with constant density over ``[0, inner_lo) U (inner_hi, 1]``.
    """
    lo, hi, d = float(inner_lo), float(inner_hi), float(inner_density)
    if not 0.0 <= lo < hi <= 1.0:
        raise ConfigurationError("need 0 <= inner_lo < inner_hi <= 1")
    if not d > 0:
        raise ConfigurationError("inner density must be positive")
    inner_mass = d * (hi - lo)
    outer_len = 1.0 - (hi - lo)
    if inner_mass > 1.0 + 1e-12:
        raise ConfigurationError(f"inner mass {inner_mass} exceeds 1")
    if outer_len <= 0.0:
        if abs(inner_mass - 1.0) > 1e-12:
            raise ConfigurationError("window covers [0, 1] but its mass is not 1")
        d_out = 0.0
    else:
        d_out = max(1.0 - inner_mass, 0.0) / outer_len

    knots = [0.0, lo, hi, 1.0]
    cvals = [0.0, d_out * lo, d_out * lo + inner_mass, 1.0]
    # np.interp needs strictly increasing abscissae: drop zero-width segments
    cx, cc = _strictly_increasing(knots, cvals)
    # quantile: left-continuous inverse over the segments carrying mass
    segs = [(a, b, dens) for a, b, dens in ((0.0, lo, d_out), (lo, hi, d), (hi, 1.0, d_out))
            if b > a and dens > 0.0]
    seg_a = np.array([g[0] for g in segs])
    seg_b = np.array([g[1] for g in segs])
    seg_d = np.array([g[2] for g in segs])
    seg_hi = np.cumsum((seg_b - seg_a) * seg_d)
    seg_hi[-1] = 1.0
    seg_lo = np.concatenate([[0.0], seg_hi[:-1]])

    def density(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= lo) & (x <= hi)
        out = np.where(inside, d, d_out)
        return np.where((x < 0.0) | (x > 1.0), 0.0, out)

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), cx, cc)

    def quantile(u):
        u = np.asarray(u, dtype=float)
        i = np.clip(np.searchsorted(seg_hi, u, side="left"), 0, len(segs) - 1)
        x = seg_a[i] + (u - seg_lo[i]) / seg_d[i]
        return np.clip(x, seg_a[i], seg_b[i])

    bps = tuple(b for b in (lo, hi) if 0.0 < b < 1.0)
    return CovariateLaw(density, cdf, quantile, breakpoints=bps,
                        name="piecewise_uniform", params=(lo, hi, d))


def uniform_covariate() -> CovariateLaw:
    return builtin_piecewise_uniform(0.0, 1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Full data-generating law.

    Exactly one of ``alpha`` (a fixed mis-specification scale) and ``gamma``
    (``alpha_n = n ** gamma``) must be given.  ``noise`` draws standard
    noise as ``noise(rng, size)``; Gaussian by default.
    """

    signal: SignalFunction
    theta0: float
    sigma: float
    covariate: CovariateLaw = field(default_factory=uniform_covariate)
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    noise: Callable = _standard_normal

    def __post_init__(self):
        if not 0.0 < self.theta0 < 1.0:
            raise ConfigurationError("theta0 must lie strictly inside (0, 1)")
        if not self.sigma >= 0.0:
            raise ConfigurationError("sigma must be non-negative")
        if (self.alpha is None) == (self.gamma is None):
            raise ConfigurationError("set exactly one of alpha and gamma")
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        if self.gamma is not None and not self.gamma >= 0:
            raise ConfigurationError("gamma must be non-negative")
        if not float(self.covariate.density(self.theta0)) > 0.0:
            raise ConfigurationError("covariate density must be positive at theta0")
        if any(abs(self.theta0 - b) < 1e-12 for b in self.covariate.breakpoints):
            raise ConfigurationError("covariate density must be smooth around theta0")

    def alpha_n(self, n: Optional[int] = None) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        if n is None:
            raise ConfigurationError("gamma-parameterised spec needs n to fix alpha_n")
        return float(n) ** self.gamma

    def at(self, n: int) -> "ModelSpec":
        """The stage-``n`` model with ``alpha`` frozen at ``alpha_n(n)``."""
        return ModelSpec(self.signal, self.theta0, self.sigma, self.covariate,
                         alpha=self.alpha_n(n), noise=self.noise)

    def regression(self, x, n: Optional[int] = None):
        """``f_n(x) = f(alpha_n (x - theta0))``."""
        x = np.asarray(x, dtype=float)
        return self.signal.eval(self.alpha_n(n) * (x - self.theta0))


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ConfigurationError("x and y must be 1-d arrays of equal length")
        if x.size < 2:
            raise ConfigurationError("a dataset needs at least two points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx])


def generate_dataset(spec: ModelSpec, n: int, seed) -> Dataset:
    """Draw ``n`` i.i.d. pairs from ``spec``.

    Covariates come from the quantile transform of one uniform stream and
    the noise from a second, independent stream, both derived from ``seed``.
    The result is a pure function of ``(spec, n, seed)``.
    """
    n = int(n)
    if n < 2:
        raise ConfigurationError("n must be at least 2")
    root = _streams.seed_sequence(seed, _streams.DATA)
    x_seq, e_seq = root.spawn(2)
    u = np.random.default_rng(x_seq).random(n)
    x = spec.covariate.quantile(u)
    eps = np.asarray(spec.noise(np.random.default_rng(e_seq), n), dtype=float)
    y = spec.regression(x, n) + spec.sigma * eps
    return Dataset(x, y)
