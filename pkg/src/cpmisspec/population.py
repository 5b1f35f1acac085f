"""Stage-n population parameters and asymptotic constants.

The population stump ``psi^n = (theta^n, beta_l^n, beta_u^n)`` minimises

    M_n(psi) = E{Y - beta_l 1(X <= theta) - beta_u 1(X > theta)}^2

and is characterised by the normal equations

    beta_l^n = E[f_n(X); X <= theta^n] / F_X(theta^n)
    beta_u^n = E[f_n(X); X > theta^n] / (1 - F_X(theta^n))
    alpha_n (theta^n - theta0) = f^{-1}((beta_l^n + beta_u^n) / 2)

which :func:`solve_population` iterates to a fixed point.  All integrals
are computed by adaptive Gauss-Kronrod quadrature with panel breaks at the
kinks of the integrand and on a geometric ladder around ``theta0`` so that
steep signals are resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (DomainError, IntegrabilityError, NonPositiveDriftError,
                     NumericalFailureError)
from .model import ModelSpec

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
TAIL_TOL = 1e-10
MAX_ITER = 200
SCAN_POINTS = 200
SCAN_TOL = 1e-10
MAX_RESTARTS = 5
THETA_TOL = 1e-12
XI_TOL = 1e-10
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class PopulationSolution:
    theta_n: float
    beta_l_n: float
    beta_u_n: float
    xi_n: float
    criterion_value: float
    alpha: float
    iterations: int

    @property
    def psi(self):
        return (self.theta_n, self.beta_l_n, self.beta_u_n)


@dataclass(frozen=True)
class AsymptoticConstants:
    """Constants of the limit laws.

    ``b`` is the quadratic drift of the slow-regime Chernoff limit for the
    three-parameter fit and may be non-positive for some models; the
    slow-regime sampler refuses such values.  ``b_one_param`` is the drift
    of the known-levels problem, ``p_X(theta0) f'(xi0) / 2``.
    """

    xi0: float
    xi_l: float
    xi_u: float
    a: float
    b: float
    c1: float
    c2: float
    px_theta0: float
    Fx_theta0: float
    beta_l0: float
    beta_u0: float
    sigma: float
    f_prime_xi0: float
    tail_cutoff: float

    @property
    def b_one_param(self) -> float:
        return 0.5 * self.px_theta0 * self.f_prime_xi0

    @property
    def a_one_param(self) -> float:
        return self.a

    @property
    def slow_regime_defined(self) -> bool:
        return self.b > 0

    def require_positive_drift(self):
        if not self.b > 0:
            raise NonPositiveDriftError(
                f"slow-regime drift b = {self.b:.6g} is not positive; "
                "argmax of a W(h) - b h^2 is not finite")
        return self

    def level_bias_limits(self) -> dict:
        """Limits of ``alpha_n (beta^n - beta^0)`` for both levels.

        ``upper_as_printed`` divides by ``F_X(theta0)``; ``upper_complement``
        divides by ``1 - F_X(theta0)``, the form the normal equations give.
        """
        p, F = self.px_theta0, self.Fx_theta0
        return {
            "lower": p / F * self.xi_l,
            "upper_as_printed": p / F * self.xi_u,
            "upper_complement": p / (1.0 - F) * self.xi_u,
        }


@dataclass(frozen=True)
class FixedFunctionConstants:
    """Chernoff constants for a fixed (not sequence) regression curve.

    ``n^{1/3} (theta_hat - theta_pop)`` is approximately distributed as the
    argmax of ``a W(h) - b h^2``, with ``a = sigma sqrt(p_X(theta_pop))`` and
    ``b = v'(theta_pop) p / 2 - (beta_u - beta_l) p^2 (1/F + 1/(1-F)) / 8``
    where ``v`` is the regression curve and the levels are population values.
    """

    a: float
    b: float
    theta: float
    beta_l: float
    beta_u: float
    px: float
    Fx: float
    v_prime: float


def _ladder(center, width, lo, hi):
    pts = []
    for k in range(-4, 90):
        d = width * 2.0 ** k
        if d > hi - lo:
            break
        pts.extend((center - d, center + d))
    return pts


def _points(spec: ModelSpec, alpha, lo, hi, extra=()):
    width = spec.signal.width / alpha
    pts = list(spec.covariate.breakpoints) + [spec.theta0] + list(extra)
    pts += _ladder(spec.theta0, width, lo, hi)
    pts = sorted({p for p in pts if lo < p < hi})
    return pts


def _quad(func, lo, hi, points):
    if hi <= lo:
        return 0.0
    limit = 200 + 4 * len(points)
    val, _ = integrate.quad(func, lo, hi, points=points or None, epsabs=QUAD_EPSABS,
                            epsrel=QUAD_EPSREL, limit=limit)
    return val


def _integrand(spec, alpha, shift=0.0, power=1):
    sig, cov, t0 = spec.signal, spec.covariate, spec.theta0

    def g(x):
        v = float(sig.eval(alpha * (x - t0))) - shift
        return (v ** power) * float(cov.density(x))

    return g


def level_integrals(spec: ModelSpec, theta: float, alpha: float):
    """Bias integrals ``int_0^theta (f_n - beta_l0) p`` and ``int_theta^1 (f_n - beta_u0) p``."""
    sig = spec.signal
    left = _quad(_integrand(spec, alpha, sig.lower_limit), 0.0, theta,
                 _points(spec, alpha, 0.0, theta))
    right = _quad(_integrand(spec, alpha, sig.upper_limit), theta, 1.0,
                  _points(spec, alpha, theta, 1.0))
    return left, right


def levels_at(spec: ModelSpec, theta: float, alpha: float):
    """Best stump levels for a split fixed at ``theta``."""
    sig = spec.signal
    F = float(spec.covariate.cdf(theta))
    left, right = level_integrals(spec, theta, alpha)
    return sig.lower_limit + left / F, sig.upper_limit + right / (1.0 - F)


def _mid_shift(spec, theta, alpha):
    """``(beta_l + beta_u)/2 - (beta_l0 + beta_u0)/2`` at split ``theta``."""
    F = float(spec.covariate.cdf(theta))
    left, right = level_integrals(spec, theta, alpha)
    return 0.5 * (left / F + right / (1.0 - F))


def criterion_Mn(spec: ModelSpec, psi, alpha: float | None = None, n: int | None = None) -> float:
    """Population squared error ``M_n(psi)`` of the stump ``psi = (theta, beta_l, beta_u)``."""
    theta, bl, bu = (float(v) for v in psi)
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    alpha = spec.alpha_n(n) if alpha is None else float(alpha)
    sig, cov, t0 = spec.signal, spec.covariate, spec.theta0

    def sq(level):
        def g(x):
            d = float(sig.eval(alpha * (x - t0))) - level
            return d * d * float(cov.density(x))
        return g

    left = _quad(sq(bl), 0.0, theta, _points(spec, alpha, 0.0, theta))
    right = _quad(sq(bu), theta, 1.0, _points(spec, alpha, theta, 1.0))
    return spec.sigma ** 2 + left + right


def _iterate(spec, alpha, theta):
    sig = spec.signal
    xi = alpha * (theta - spec.theta0)
    for it in range(1, MAX_ITER + 1):
        mid = sig.midpoint + _mid_shift(spec, theta, alpha)
        if not sig.lower_limit < mid < sig.upper_limit:
            raise DomainError(f"level midpoint {mid} left the signal range")
        xi_new = float(sig.inverse(mid))
        theta_new = spec.theta0 + xi_new / alpha
        if not 0.0 < theta_new < 1.0:
            raise DomainError(f"theta iterate {theta_new} left (0, 1)")
        done = abs(theta_new - theta) < THETA_TOL and abs(xi_new - xi) < XI_TOL
        theta, xi = theta_new, xi_new
        if done:
            return theta, xi, it
    raise NumericalFailureError(
        f"population fixed point did not converge in {MAX_ITER} iterations",
        last_iterate=theta)


def profile_scan(spec: ModelSpec, alpha: float, m: int = SCAN_POINTS):
    """Profiled criterion ``M_n - sigma^2 - E f_n^2`` on an even grid of splits.

    With the levels profiled out the criterion is
    ``-G(theta)^2 / F - (G(1) - G(theta))^2 / (1 - F)`` where
    ``G(theta) = int_0^theta f_n p``, so one cumulative integral suffices.
    """
    grid = np.linspace(0.0, 1.0, m + 2)[1:-1]
    edges = np.concatenate([[0.0], grid, [1.0]])
    g = _integrand(spec, alpha)
    pieces = [_quad(g, a, b, _points(spec, alpha, a, b)) for a, b in zip(edges[:-1], edges[1:])]
    cum = np.cumsum(pieces)
    gl, total = cum[:-1], cum[-1]
    F = np.asarray(spec.covariate.cdf(grid), dtype=float)
    return grid, -gl ** 2 / F - (total - gl) ** 2 / (1.0 - F)


def solve_population(spec: ModelSpec, n: int | None = None) -> PopulationSolution:
    """Solve the normal equations by fixed-point iteration on ``theta``.

    Starting at ``theta0``, alternate between the best levels for the
    current split and the split ``theta0 + f^{-1}((beta_l + beta_u)/2) / alpha_n``
    until successive iterates agree (both in ``theta`` to 1e-12 and in the
    rescaled bias ``xi`` to 1e-10) or 200 iterations elapse.

    The normal equations only characterise stationary points.  When
    ``alpha_n`` is small the iteration can settle on a local maximum of the
    profiled criterion (for instance ``theta0`` itself for a symmetric
    model with a concentrated covariate), so the result is compared with a
    grid scan and the iteration restarted from any grid split that does
    better.  Among equally good minimisers the smallest ``theta`` wins.
    """
    alpha = spec.alpha_n(n)
    if not math.isfinite(alpha):
        raise DomainError("alpha_n must be finite")
    theta, xi, it = _iterate(spec, alpha, spec.theta0)
    grid, prof = None, None
    for _ in range(MAX_RESTARTS):
        bl, bu = levels_at(spec, theta, alpha)
        F = float(spec.covariate.cdf(theta))
        current = -(bl * bl * F + bu * bu * (1.0 - F))
        if grid is None:
            grid, prof = profile_scan(spec, alpha)
        k = int(np.argmin(prof))
        if not prof[k] < current - SCAN_TOL * max(1.0, abs(current)):
            break
        theta, xi, more = _iterate(spec, alpha, float(grid[k]))
        it += more
        # later restarts must beat this stationary point too
        prof = np.where(prof < current, prof, np.inf)
    else:
        raise NumericalFailureError("no stationary point attains the scanned minimum",
                                    last_iterate=theta)

    bl, bu = levels_at(spec, theta, alpha)
    _verify(spec, theta, bl, bu, xi, alpha)
    value = criterion_Mn(spec, (theta, bl, bu), alpha=alpha)
    return PopulationSolution(theta, bl, bu, xi, value, alpha, it)


def _verify(spec, theta, bl, bu, xi, alpha):
    F = float(spec.covariate.cdf(theta))
    direct_l = _quad(_integrand(spec, alpha), 0.0, theta, _points(spec, alpha, 0.0, theta)) / F
    direct_u = _quad(_integrand(spec, alpha), theta, 1.0, _points(spec, alpha, theta, 1.0)) / (1 - F)
    xi_check = float(spec.signal.inverse(0.5 * (bl + bu)))
    res = max(abs(bl - direct_l), abs(bu - direct_u), abs(xi - xi_check))
    if not res < RESIDUAL_TOL:
        raise NumericalFailureError(f"normal-equation residual {res:.3g} too large",
                                    last_iterate=theta)
    if not bl < bu:
        raise NumericalFailureError("population levels are not ordered", last_iterate=theta)


def _tail_cutoff(sig, xi0):
    if sig.tail_mass is None:
        raise IntegrabilityError(f"signal {sig.name!r} declares no tail certificate")
    T = max(abs(xi0) + sig.width, sig.width)
    for _ in range(200):
        if sig.tail_mass(T) < TAIL_TOL:
            return T
        T *= 2.0
    raise IntegrabilityError("tail mass bound never falls below tolerance")


def asymptotic_constants(spec: ModelSpec) -> AsymptoticConstants:
    """Limit-law constants of ``spec`` (independent of ``alpha_n``)."""
    sig, cov, t0 = spec.signal, spec.covariate, spec.theta0
    bl0, bu0 = sig.lower_limit, sig.upper_limit
    xi0 = float(sig.inverse(sig.midpoint))
    T = _tail_cutoff(sig, xi0)
    pts_l = sorted(p for p in _ladder(xi0, sig.width, -T, xi0) if -T < p < xi0)
    pts_u = sorted(p for p in _ladder(xi0, sig.width, xi0, T) if xi0 < p < T)
    xi_l = _quad(lambda t: float(sig.eval(t)) - bl0, -T, xi0, pts_l)
    xi_u = _quad(lambda t: float(sig.eval(t)) - bu0, xi0, T, pts_u)

    p = float(cov.density(t0))
    F = float(cov.cdf(t0))
    fp = float(sig.deriv(xi0))
    jump = bu0 - bl0
    a = math.sqrt(spec.sigma ** 2 * p)
    b = 0.5 * fp * p - 0.125 * jump * p * p * (1.0 / F + 1.0 / (1.0 - F))
    c1 = p * jump / (2.0 * F)
    c2 = p * jump / (2.0 * (1.0 - F))
    return AsymptoticConstants(xi0, xi_l, xi_u, a, b, c1, c2, p, F, bl0, bu0,
                               float(spec.sigma), fp, T)


def fixed_function_constants(spec: ModelSpec, n: int | None = None,
                             solution: PopulationSolution | None = None) -> FixedFunctionConstants:
    """Chernoff constants treating ``f_n`` as a fixed regression curve."""
    sol = solve_population(spec, n) if solution is None else solution
    alpha = sol.alpha
    th = sol.theta_n
    p = float(spec.covariate.density(th))
    F = float(spec.covariate.cdf(th))
    vp = alpha * float(spec.signal.deriv(alpha * (th - spec.theta0)))
    jump = sol.beta_u_n - sol.beta_l_n
    a = spec.sigma * math.sqrt(p)
    b = 0.5 * vp * p - 0.125 * jump * p * p * (1.0 / F + 1.0 / (1.0 - F))
    return FixedFunctionConstants(a, b, th, sol.beta_l_n, sol.beta_u_n, p, F, vp)


def moments_at(spec: ModelSpec, theta: float, alpha: float):
    """``(F, int_0^theta f_n p, int_theta^1 f_n p, E f_n^2)`` for criterion expansions."""
    F = float(spec.covariate.cdf(theta))
    gl = _quad(_integrand(spec, alpha), 0.0, theta, _points(spec, alpha, 0.0, theta))
    gu = _quad(_integrand(spec, alpha), theta, 1.0, _points(spec, alpha, theta, 1.0))
    pts = _points(spec, alpha, 0.0, 1.0)
    ef2 = _quad(_integrand(spec, alpha, power=2), 0.0, 1.0, pts)
    return F, gl, gu, ef2
