"""Samplers for the limit laws of the change-point estimator.

Slow regime
    ``argmax_h a W(h) - b h^2`` for a two-sided standard Brownian motion
    ``W``.  By Brownian scaling this is ``(a/b)^{2/3}`` times the standard
    Chernoff variable ``Z = argmax W(h) - h^2``, which is simulated on a grid.

Intermediate / fast regimes and the bridging family
    Smallest argmin of a two-sided compound-Poisson-type process.  On the
    right of the origin arrivals ``S_1 < S_2 < ...`` of a rate ``lambda``
    Poisson process carry increments ``eps_j + d_r(S_j)``; on the left,
    arrivals ``S~_j`` carry ``-eps~_j + d_l(S~_j)``.  By convention the empty
    sum is zero, so the process vanishes on ``[-S~_1, S_1)``.  The process is
    right-continuous, so having flipped ``j`` points on the right the
    minimiser sits at ``S_j``, and having flipped ``j`` points on the left it
    sits at ``-S~_{j+1}``.  This is the same left-endpoint rule that the
    least-squares estimator uses.

The drifts ``d_r``, ``d_l`` are the ones given by:

===============  =============================  =============================
process          right drift ``d_r(s)``         left drift ``d_l(s)``
===============  =============================  =============================
fast             ``beta_u0 - f(xi0)``           ``f(xi0) - beta_l0``
intermediate     ``f(xi0 + s) - f(xi0)``        ``f(xi0) - f(xi0 - s)``
``Lambda_c``     ``f(xi0 + c s) - f(xi0)``      ``f(xi0) - f(xi0 - c s)``
===============  =============================  =============================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from . import _streams
from .errors import (ConfigurationError, NonPositiveDriftError,
                     PathologicalDriftError, SpecificationError)
from .model import SignalFunction, _standard_normal
from .population import AsymptoticConstants

CHERNOFF_DELTA = 1e-3
CHERNOFF_HALF_WIDTH = 4.0
CHERNOFF_CHUNK = 256

COMPOUND_CHUNK = 1024
MIN_JUMPS = 16
MAX_JUMPS = 2 ** 16
FAILURE_PROB = 1e-6
_FIRST_BLOCK = 64
_MAX_BLOCK = 4096


@dataclass(frozen=True)
class ChernoffSpec:
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigurationError("Chernoff scale a must be positive")
        if not self.b > 0:
            raise NonPositiveDriftError(f"Chernoff drift b = {self.b:.6g} is not positive")

    @property
    def scale(self) -> float:
        return (self.a / self.b) ** (2.0 / 3.0)


@dataclass(frozen=True)
class LimitSample:
    """I.i.d. draws of a limit variable.

    ``jumps`` (compound-Poisson laws only) holds the signed number of
    arrivals flipped at the minimiser: positive on the right, negative on
    the left, zero when the empty-sum level is the minimum.
    """

    values: np.ndarray
    regime: str
    seed: object
    jumps: Optional[np.ndarray] = None

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ConstantDrift:
    value: float

    def __call__(self, s):
        return np.full(np.shape(s), self.value)


@dataclass(frozen=True, eq=False)
class SignalDrift:
    """``f(xi0 + c s) - f(xi0)`` (right) or ``f(xi0) - f(xi0 - c s)`` (left)."""

    signal: SignalFunction
    xi0: float
    c: float
    side: str

    def __post_init__(self):
        object.__setattr__(self, "_f0", float(self.signal.eval(self.xi0)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.side == "right":
            return self.signal.eval(self.xi0 + self.c * s) - self._f0
        return self._f0 - self.signal.eval(self.xi0 - self.c * s)


@dataclass(frozen=True)
class CompoundArgminSpec:
    """Two-sided marked Poisson process with additive noise.

    Drifts must be non-decreasing in the arrival time (true for every
    process built from an increasing signal); the stopping rule relies on it.
    ``noise(rng, shape)`` draws standard noise, scaled by ``noise_sigma``.
    For non-Gaussian noise ``noise_sigma`` must be a sub-Gaussian proxy.
    """

    rate: float
    right_drift: Callable
    left_drift: Callable
    noise_sigma: float
    noise: Callable = field(default=_standard_normal, compare=False)
    label: str = ""

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigurationError("Poisson rate must be positive")
        if not self.noise_sigma >= 0:
            raise ConfigurationError("noise sigma must be non-negative")

    def right_increment(self, s, eps):
        return np.asarray(eps) + self.right_drift(s)

    def left_increment(self, s, eps):
        return -np.asarray(eps) + self.left_drift(s)


# ---------------------------------------------------------------------------
# Chernoff-type laws


def chernoff_argmax_from_increments(dw_right, dw_left, delta):
    """Grid argmax of ``W(h) - h^2`` from Brownian increments on each side.

    ``dw_right[:, k]`` is the increment of ``W`` over ``[k delta, (k+1) delta]``
    and ``dw_left`` likewise for ``-h``.  Ties go to the smallest ``h``.
    """
    dw_right = np.atleast_2d(dw_right)
    dw_left = np.atleast_2d(dw_left)
    K = dw_right.shape[1]
    h = delta * np.arange(1, K + 1)
    right = np.cumsum(dw_right, axis=1) - h * h
    left = np.cumsum(dw_left, axis=1) - h * h
    paths = np.concatenate([left[:, ::-1], np.zeros((right.shape[0], 1)), right], axis=1)
    grid = np.concatenate([-h[::-1], [0.0], h])
    return grid[np.argmax(paths, axis=1)]


def sample_standard_chernoff(m: int, seed, delta: float = CHERNOFF_DELTA,
                             half_width: float = CHERNOFF_HALF_WIDTH) -> np.ndarray:
    """Draws of ``argmax_h W(h) - h^2`` on ``[-H, H]`` with grid step ``delta``."""
    m = int(m)
    K = int(round(half_width / delta))
    if K < 1:
        raise ConfigurationError("grid step larger than the window")
    sd = math.sqrt(delta)
    out = []
    for k in range(-(-m // CHERNOFF_CHUNK)):
        rng = _streams.generator(seed, _streams.CHERNOFF, k)
        rows = min(CHERNOFF_CHUNK, m - k * CHERNOFF_CHUNK)
        dw = rng.standard_normal((2, CHERNOFF_CHUNK, K)) * sd
        out.append(chernoff_argmax_from_increments(dw[0], dw[1], delta)[:rows])
    return np.concatenate(out) if out else np.empty(0)


def sample_chernoff_argmax(spec: ChernoffSpec, m: int, seed, delta: float = CHERNOFF_DELTA,
                           half_width: float = CHERNOFF_HALF_WIDTH) -> LimitSample:
    """Draws of ``argmax_h a W(h) - b h^2``, i.e. ``(a/b)^{2/3} Z``."""
    if not spec.b > 0:
        raise NonPositiveDriftError("Chernoff drift must be positive")
    z = sample_standard_chernoff(m, seed, delta, half_width)
    return LimitSample(spec.scale * z, "slow", seed)


def chernoff_spec(constants: AsymptoticConstants, one_parameter: bool = False) -> ChernoffSpec:
    """Slow-regime constants: ``(a, b)``, or ``(a0, b0)`` for known levels."""
    if one_parameter:
        return ChernoffSpec(constants.a_one_param, constants.b_one_param)
    constants.require_positive_drift()
    return ChernoffSpec(constants.a, constants.b)


# ---------------------------------------------------------------------------
# compound-Poisson argmin laws


def spec_fast(constants: AsymptoticConstants, noise=_standard_normal) -> CompoundArgminSpec:
    """Fast-regime process: depends on ``f`` only through its two limits."""
    half_jump = 0.5 * (constants.beta_u0 - constants.beta_l0)
    return CompoundArgminSpec(constants.px_theta0, ConstantDrift(half_jump),
                              ConstantDrift(half_jump), constants.sigma, noise, "fast")


def spec_lambda_c(constants: AsymptoticConstants, f: SignalFunction, c: float,
                  noise=_standard_normal) -> CompoundArgminSpec:
    """Bridging process ``Lambda_c``; ``c = 1`` is the intermediate process."""
    if not c > 0:
        raise ConfigurationError("scale c must be positive")
    c = float(c)
    return CompoundArgminSpec(constants.px_theta0,
                              SignalDrift(f, constants.xi0, c, "right"),
                              SignalDrift(f, constants.xi0, c, "left"),
                              constants.sigma, noise, f"lambda_c={c:g}")


def spec_intermediate(constants: AsymptoticConstants, f: SignalFunction,
                      noise=_standard_normal) -> CompoundArgminSpec:
    """Intermediate-regime process (``alpha_n = n``)."""
    return spec_lambda_c(constants, f, 1.0, noise)


def check_drift(spec: CompoundArgminSpec, seed, n_draws: int = 10_000, z: float = 5.0):
    """Monte Carlo check that both sides drift upward.

    Simulates ``n_draws`` increments along one long path per side and
    requires each sample mean to exceed ``z`` standard errors.
    """
    rng = _streams.generator(seed, _streams.DRIFT_CHECK)
    for side, drift, sign in (("right", spec.right_drift, 1.0), ("left", spec.left_drift, -1.0)):
        s = np.cumsum(rng.standard_exponential(n_draws)) / spec.rate
        inc = sign * spec.noise_sigma * np.asarray(spec.noise(rng, n_draws)) + drift(s)
        mean = inc.mean()
        se = inc.std(ddof=1) / math.sqrt(n_draws)
        if not (mean > z * se and mean > 0):
            raise SpecificationError(
                f"{side} increments do not drift upward (mean {mean:.4g}, se {se:.3g})")


def _stop_mask(gap, mu, sigma, jumps):
    ok = (jumps >= MIN_JUMPS) & (gap > 0) & (mu > 0)
    if sigma > 0:
        # P(random walk with drift >= mu ever falls by gap) <= exp(-2 mu gap / sigma^2)
        ok &= 2.0 * mu * gap / sigma ** 2 >= -math.log(FAILURE_PROB)
    return ok


def _side_minimum(spec, rng, m, left):
    """Running minimum of one side, simulated block-wise until it settles.

    Returns ``(min value, location magnitude, jump index)``.  Location is
    ``S_j`` on the right and ``S~_{j+1}`` on the left.
    """
    drift = spec.left_drift if left else spec.right_drift
    sign = -1.0 if left else 1.0
    sigma = spec.noise_sigma
    partial = np.zeros(m)
    runmin = np.zeros(m)
    loc = np.zeros(m)
    idx = np.zeros(m, dtype=np.int64)
    last_s = np.zeros(m)
    jumps = np.zeros(m, dtype=np.int64)
    pending = np.full(m, left)
    active = np.arange(m)
    K = _FIRST_BLOCK
    while active.size:
        a = active.size
        s = last_s[active, None] + np.cumsum(rng.standard_exponential((a, K)), axis=1) / spec.rate
        eps = sigma * np.asarray(spec.noise(rng, (a, K)))
        v = partial[active, None] + np.cumsum(sign * eps + drift(s), axis=1)
        rows = np.arange(a)
        if left:
            # later (further left) index wins ties
            pos = K - 1 - np.argmin(v[:, ::-1], axis=1)
            bmin = v[rows, pos]
            pend = pending[active]
            loc[active[pend]] = s[pend, 0]
            pending[active[pend]] = False
            better = bmin <= runmin[active]
        else:
            pos = np.argmin(v, axis=1)
            bmin = v[rows, pos]
            better = bmin < runmin[active]
        sel = active[better]
        runmin[sel] = bmin[better]
        idx[sel] = jumps[sel] + pos[better] + 1
        if left:
            inner = better & (pos < K - 1)
            loc[active[inner]] = s[rows[inner], pos[inner] + 1]
            pending[active[better & (pos == K - 1)]] = True
        else:
            loc[sel] = s[rows[better], pos[better]]
        partial[active] = v[:, -1]
        last_s[active] = s[:, -1]
        jumps[active] += K
        done = _stop_mask(partial[active] - runmin[active], drift(last_s[active]),
                          sigma, jumps[active])
        active = active[~done]
        if active.size and jumps[active].max() >= MAX_JUMPS:
            raise PathologicalDriftError(
                f"compound-Poisson path did not settle within {MAX_JUMPS} jumps")
        K = min(2 * K, _MAX_BLOCK, MAX_JUMPS)
    return runmin, loc, idx


def sample_compound_argmin(spec: CompoundArgminSpec, m: int, seed, prefactor: float = 1.0,
                           check: bool = True, regime: Optional[str] = None) -> LimitSample:
    """Draws of the smallest argmin of a two-sided compound-Poisson process.

    Draws are produced in blocks of 1024, block ``k`` using its own
    stream derived from ``(seed, k)``; a request for ``m`` draws therefore
    extends, rather than changes, a request for fewer whole blocks.
    ``prefactor`` multiplies every draw (default 1).
    """
    m = int(m)
    if check:
        check_drift(spec, seed)
    values, jumps = [], []
    for k in range(-(-m // COMPOUND_CHUNK)):
        r_seq, l_seq = _streams.seed_sequence(seed, _streams.COMPOUND, k).spawn(2)
        rmin, rloc, ridx = _side_minimum(spec, np.random.default_rng(r_seq), COMPOUND_CHUNK, False)
        lmin, lloc, lidx = _side_minimum(spec, np.random.default_rng(l_seq), COMPOUND_CHUNK, True)
        use_left = lmin <= rmin
        values.append(np.where(use_left, -lloc, rloc))
        jumps.append(np.where(use_left, -lidx, ridx))
    vals = np.concatenate(values)[:m] if values else np.empty(0)
    jmp = np.concatenate(jumps)[:m] if jumps else np.empty(0, dtype=np.int64)
    return LimitSample(prefactor * vals, regime or spec.label or "compound", seed, jmp)


@dataclass(frozen=True)
class CompoundPaths:
    """Fixed-horizon paths: arrival times and partial sums, shape ``(m, J)``."""

    right_times: np.ndarray
    right_values: np.ndarray
    left_times: np.ndarray
    left_values: np.ndarray


def simulate_compound_paths(spec: CompoundArgminSpec, m: int, seed, n_jumps: int) -> CompoundPaths:
    """Simulate the first ``n_jumps`` arrivals on each side of ``m`` paths."""
    rng = _streams.generator(seed, _streams.ORACLE)
    out = []
    for drift, sign in ((spec.right_drift, 1.0), (spec.left_drift, -1.0)):
        s = np.cumsum(rng.standard_exponential((m, n_jumps)), axis=1) / spec.rate
        eps = spec.noise_sigma * np.asarray(spec.noise(rng, (m, n_jumps)))
        out.append(s)
        out.append(np.cumsum(sign * eps + drift(s), axis=1))
    return CompoundPaths(*out)


def smallest_argmin(paths: CompoundPaths):
    """Smallest minimiser of each stored path (a pure function of the path).

    Left candidates ``j = 0 .. J-1`` sit at ``-S~_{j+1}`` and right candidates
    ``j = 1 .. J`` at ``S_j``; they are laid out in increasing location and
    the first minimum is taken.
    """
    m, J = paths.right_values.shape
    left_vals = np.concatenate([np.zeros((m, 1)), paths.left_values[:, :-1]], axis=1)
    vals = np.concatenate([left_vals[:, ::-1], paths.right_values], axis=1)
    locs = np.concatenate([-paths.left_times[:, ::-1], paths.right_times], axis=1)
    jumps = np.concatenate([-np.arange(J)[::-1], np.arange(1, J + 1)])
    best = np.argmin(vals, axis=1)
    return locs[np.arange(m), best], jumps[best]


def path_values(paths: CompoundPaths, h) -> np.ndarray:
    """Evaluate each stored path at the points ``h`` (shape ``(m, len(h))``).

    On the left the arrival count is left-continuous in ``-h``, so
    ``Lambda(h)`` counts arrivals with ``S~_j < -h``.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    m = paths.right_values.shape[0]
    out = np.zeros((m, h.size))
    for i, hv in enumerate(h):
        if hv >= 0:
            cnt = (paths.right_times <= hv).sum(axis=1)
            vals = paths.right_values
        else:
            cnt = (paths.left_times < -hv).sum(axis=1)
            vals = paths.left_values
        take = np.clip(cnt - 1, 0, None)
        out[:, i] = np.where(cnt > 0, vals[np.arange(m), take], 0.0)
    return out


# ---------------------------------------------------------------------------
# level limits and transition diagnostics


def sample_level_limits(constants: AsymptoticConstants, m: int, seed):
    """Gaussian limits of the rescaled level estimates.

    Variances are ``sigma^2 / F_X(theta0)`` and ``sigma^2 / (1 - F_X(theta0))``;
    the stream is tagged separately from every change-point sampler.
    """
    F = constants.Fx_theta0
    if not 0.0 < F < 1.0:
        raise ConfigurationError("F_X(theta0) must lie in (0, 1)")
    rng = _streams.generator(seed, _streams.LEVELS)
    z = rng.standard_normal((2, int(m)))
    s = constants.sigma
    return (LimitSample(s / math.sqrt(F) * z[0], "level_lower", seed),
            LimitSample(s / math.sqrt(1.0 - F) * z[1], "level_upper", seed))


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    return float(stats.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


@dataclass(frozen=True)
class TransitionRow:
    c: float
    ks_to_chernoff: float
    ks_to_fast: float


def transition_diagnostic(f: SignalFunction, constants: AsymptoticConstants, c_values,
                          m: int, seed) -> list:
    """KS distances of ``Lambda_c`` argmins to both extreme limits.

    For each ``c`` compares ``c^{2/3} argmin Lambda_c`` with the known-levels
    Chernoff law ``argmin a0 W(h) + b0 h^2`` and ``argmin Lambda_c`` with the
    fast-regime law.
    """
    chern = sample_chernoff_argmax(chernoff_spec(constants, one_parameter=True), m,
                                   _streams.seed_sequence(seed, 0)).values
    fast = sample_compound_argmin(spec_fast(constants), m, _streams.seed_sequence(seed, 1)).values
    rows = []
    for i, c in enumerate(c_values):
        lam = sample_compound_argmin(spec_lambda_c(constants, f, c), m,
                                     _streams.seed_sequence(seed, 2, i)).values
        rows.append(TransitionRow(float(c), ks_statistic(c ** (2.0 / 3.0) * lam, chern),
                                  ks_statistic(lam, fast)))
    return rows
