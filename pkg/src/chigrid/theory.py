"""
Normalization constants and limiting distributions of the pair of maxima.

All limits are mixtures over the chi law: with W = exp(-r + sqrt(2 r) chi_m),
each limiting joint CDF has the form E exp(-g W) for a grid dependent g.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from .chiproc import GridKind
from .exceptions import FrechetViolation
from .settings import CHIGRID_QUADRATURE_TOLERANCE

logger = logging.getLogger(__name__)

CHI_TAIL_TRUNCATION = 1e-12
FRECHET_SLACK = 1e-6
# exp(-x) is evaluated with x clamped so that the mixture argument stays finite
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class NormConstants:
    a_T: float
    b_T: float
    b_delta_T: float
    T: float
    m: int
    alpha: float
    grid_kind: GridKind
    H_alpha: float
    H_D_alpha: float | None = None
    delta: float | None = None

    def normalize(self, m_cont, m_grid):
        return (
            self.a_T * (m_cont - self.b_T),
            self.a_T * (m_grid - self.b_delta_T),
        )


def _log_tail_factor(m, log_weight, exponent, a_T):
    return (
        (1.0 - m / 2.0) * math.log(2.0)
        - special.gammaln(m / 2.0)
        + log_weight
        + exponent * math.log(a_T)
    )


def norm_constants(T, m, alpha, grid_kind, H_alpha, H_D_alpha=None, delta=None):
    if not T > math.e:
        raise ValueError("T must exceed e, got %r" % T)
    if m < 1:
        raise ValueError("m must be at least 1, got %r" % m)
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2], got %r" % alpha)
    if not H_alpha > 0:
        raise ValueError("H_alpha must be positive, got %r" % H_alpha)
    grid_kind = GridKind(grid_kind)

    a_T = math.sqrt(2.0 * math.log(T))
    continuous_exponent = 2.0 / alpha + m - 2.0
    b_T = a_T + _log_tail_factor(m, math.log(H_alpha), continuous_exponent, a_T) / a_T

    if grid_kind == GridKind.PICKANDS:
        if not (H_D_alpha and H_D_alpha > 0):
            raise ValueError("a Pickands grid needs H_D_alpha > 0")
        b_delta_T = (
            a_T
            + _log_tail_factor(m, math.log(H_D_alpha), continuous_exponent, a_T) / a_T
        )
    elif grid_kind == GridKind.SPARSE:
        if not (delta and delta > 0):
            raise ValueError("a sparse grid needs delta > 0")
        b_delta_T = a_T + _log_tail_factor(m, -math.log(delta), m - 2.0, a_T) / a_T
    else:
        b_delta_T = b_T

    return NormConstants(
        a_T=a_T,
        b_T=b_T,
        b_delta_T=b_delta_T,
        T=T,
        m=m,
        alpha=alpha,
        grid_kind=grid_kind,
        H_alpha=H_alpha,
        H_D_alpha=H_D_alpha if grid_kind == GridKind.PICKANDS else None,
        delta=delta if grid_kind == GridKind.SPARSE else None,
    )


def chi_pdf(z, m):
    return stats.chi.pdf(z, m)


def chi_cdf(z, m):
    return stats.chi.cdf(z, m)


def tail_asymptotic(u, T, m, alpha, H_alpha):
    """Leading term of P(max over [0, T] of the chi-process > u)."""
    if not u > 0:
        raise ValueError("u must be positive")
    log_value = (
        math.log(T)
        + _log_tail_factor(m, math.log(H_alpha), 2.0 / alpha + m - 2.0, u)
        - u * u / 2.0
    )
    return math.exp(log_value)


def grid_tail_asymptotic(u, T, m, delta):
    """Leading term of P(max over the grid {k delta} in [0, T] > u)."""
    if not u > 0:
        raise ValueError("u must be positive")
    log_value = (
        math.log(T) + _log_tail_factor(m, -math.log(delta), m - 2.0, u) - u * u / 2.0
    )
    return math.exp(log_value)


def mixture_expectation(g, r, m):
    """E exp(-g exp(-r + sqrt(2 r) chi_m)) by adaptive quadrature."""
    if g < 0 or r < 0:
        raise ValueError("g and r must be nonnegative")
    if g == 0:
        return 1.0
    if r == 0:
        return math.exp(-g)

    scale = math.sqrt(2.0 * r)
    z_max = float(stats.chi.isf(CHI_TAIL_TRUNCATION, m))

    def integrand(z):
        return math.exp(-g * math.exp(-r + scale * z)) * stats.chi.pdf(z, m)

    # the integrand switches from ~pdf to ~0 where g W = 1
    switch = (r - math.log(g)) / scale
    points = [switch] if 0 < switch < z_max else None
    value, _error = integrate.quad(
        integrand,
        0.0,
        z_max,
        points=points,
        epsabs=CHIGRID_QUADRATURE_TOLERANCE,
        epsrel=CHIGRID_QUADRATURE_TOLERANCE,
        limit=200,
    )
    return min(1.0, max(0.0, value))


def sphere_average_weight(s, m):
    """E exp(s theta_1) for theta uniform on the unit sphere of R^m."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return 1.0
    order = m / 2.0 - 1.0
    log_value = (
        special.gammaln(m / 2.0)
        - order * math.log(s / 2.0)
        + math.log(special.ive(order, s))
        + s
    )
    return math.exp(log_value)


def sphere_mixture_expectation(g, r, m):
    """
    E exp(-g e^{-r} A_m(sqrt(2 r) chi_m)) with A_m = sphere_average_weight.

    The shared normal enters the norm through its projection on the direction
    of the exceedance, which is uniform on the sphere; mixture_expectation
    takes the projection to be the full length chi_m instead.
    """
    if g < 0 or r < 0:
        raise ValueError("g and r must be nonnegative")
    if g == 0:
        return 1.0
    if r == 0:
        return math.exp(-g)

    scale = math.sqrt(2.0 * r)
    z_max = float(stats.chi.isf(CHI_TAIL_TRUNCATION, m))
    weight = g * math.exp(-r)

    def integrand(z):
        mixed = weight * sphere_average_weight(scale * z, m)
        return math.exp(-mixed) * stats.chi.pdf(z, m)

    value, _error = integrate.quad(
        integrand,
        0.0,
        z_max,
        epsabs=CHIGRID_QUADRATURE_TOLERANCE,
        epsrel=CHIGRID_QUADRATURE_TOLERANCE,
        limit=200,
    )
    return min(1.0, max(0.0, value))


def _gumbel_weight(x):
    return math.exp(min(-x, MAX_EXPONENT))


def limit_marginal(x, r, m):
    return mixture_expectation(_gumbel_weight(x), r, m)


def sphere_limit_marginal(x, r, m):
    return sphere_mixture_expectation(_gumbel_weight(x), r, m)


def limit_marginal_cdf(values, r, m, sphere=False):
    """
    Vectorized limit_marginal, or sphere_limit_marginal with ``sphere``,
    suitable as a CDF for KS statistics.
    """
    values = np.asarray(values, dtype=float)
    if r == 0:
        return np.exp(-np.exp(-np.clip(values, -MAX_EXPONENT, None)))
    unique, inverse = np.unique(values, return_inverse=True)
    marginal = sphere_limit_marginal if sphere else limit_marginal
    evaluated = np.array([marginal(x, r, m) for x in unique])
    return evaluated[inverse].reshape(values.shape)


def mixed_gumbel_quantile(p, r, m):
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = -10.0, 10.0
    while limit_marginal(lo, r, m) > p:
        lo *= 2
    while limit_marginal(hi, r, m) < p:
        hi *= 2
    return optimize.brentq(lambda x: limit_marginal(x, r, m) - p, lo, hi, xtol=1e-10)


@dataclass(frozen=True)
class LimitSpec:
    m: int
    r: float
    grid_kind: GridKind
    pickands_terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        if self.m < 1:
            raise ValueError("m must be at least 1")

    def pickands_term(self, x, y):
        try:
            return self.pickands_terms[(float(x), float(y))]
        except KeyError:
            raise ValueError(
                "no Pickands grid constant supplied for (%s, %s)" % (x, y)
            ) from None


def frechet_bounds(F1, F2):
    return max(F1 + F2 - 1.0, 0.0), min(F1, F2)


def limit_joint(x, y, spec):
    grid_kind = GridKind(spec.grid_kind)
    if grid_kind == GridKind.DENSE:
        return limit_marginal(min(x, y), spec.r, spec.m)

    weight_x = _gumbel_weight(x)
    weight_y = _gumbel_weight(y)
    g = weight_x + weight_y
    if grid_kind == GridKind.PICKANDS:
        term = spec.pickands_term(x, y)
        upper = min(weight_x, weight_y)
        if term > upper + FRECHET_SLACK or term < -FRECHET_SLACK:
            raise FrechetViolation(
                "Pickands grid constant %.6g at (%s, %s) outside [0, %.6g]"
                % (term, x, y, upper)
            )
        g -= min(max(term, 0.0), upper)
    return mixture_expectation(g, spec.r, spec.m)
