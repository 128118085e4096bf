"""Gumbel-domain asymptotics for the maximum capacity under opportunistic picks.

For an absolutely continuous law F with density f, the normalizing constants
of the limiting extreme-value distribution are

    b_M = F^{-1}(1 - 1/M)          (position),
    a_M = 1 / (M f(b_M))           (scale),

and E[max of M] -> b_M + gamma_Euler * a_M.  The position parameter is found
by direct numeric inversion of the CDF: the alternative closed expression
that pushes the inverse regularized gamma through the series term-by-term is
*not* an identity (inversion and summation do not commute), so it is exposed
only as the diagnostic ``termwise_position_parameter`` for comparison.

``von_mises_check`` evaluates the growth function g(x) = (1 - F(x)) / f(x)
whose positive finite limit certifies membership in the Gumbel domain of
attraction.  For the truncated series every mixture component has scale
beta_min, so the truncated law's growth function tends to beta_min; the exact
law of a mixed-scale sum has tail scale max(beta_s) instead.  The check
reports the values together with per-point truncation validity so callers see
which regime they are in rather than a silently extrapolated limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mcsim import EmpiricalDistribution
from .moschopoulos import (
    MoschopoulosSeries,
    cdf_truncation_bound,
    pdf_truncation_bound,
    sample,
    series_cdf,
    series_pdf,
    series_survival,
)
from .specfun import EULER_GAMMA, inverse_regularized_gamma_p


@dataclass(frozen=True)
class GumbelParams:
    """Position/scale normalizers of the limiting law for M-fold maxima."""

    bM: float
    aM: float
    M: int

    def __post_init__(self):
        if self.aM <= 0:
            raise ValueError("scale parameter must be positive")
        if self.M < 2:
            raise ValueError("M must be at least 2")


def gumbel_params(cdf, pdf, M: int, x_hint: float = 1.0,
                  prob_tol: float = 1e-10) -> GumbelParams:
    """Invert the CDF at 1 - 1/M and scale by the density there.

    Bracketing bisection in x (expanding from ``x_hint``) drives
    |F(x) - (1 - 1/M)| below ``prob_tol``; the density must be positive at
    the solution.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    q = 1.0 - 1.0 / M
    lo, hi = 0.0, max(x_hint, 1e-6)
    for _ in range(400):
        if cdf(hi) >= q:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("could not bracket the position parameter")
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    bM = 0.5 * (lo + hi)
    if abs(cdf(bM) - q) > prob_tol:
        raise ArithmeticError(
            f"flat CDF near quantile: |F(bM) - (1 - 1/M)| = {abs(cdf(bM) - q):.2e}"
        )
    f = float(pdf(bM))
    if f <= 0.0:
        raise ArithmeticError("density vanishes at the position parameter")
    return GumbelParams(bM=bM, aM=1.0 / (M * f), M=M)


def gumbel_params_series(s: MoschopoulosSeries, M: int) -> GumbelParams:
    return gumbel_params(
        lambda x: series_cdf(s, x), lambda x: series_pdf(s, x), M,
        x_hint=max(s.mean, 1e-6),
    )


def asymptotic_max_capacity(gp: GumbelParams) -> float:
    """Limiting mean of the M-fold maximum: bM + Euler_gamma * aM."""
    return gp.bM + EULER_GAMMA * gp.aM


def von_mises_check(s: MoschopoulosSeries, x_grid):
    """Growth function g(x) = (1 - F(x)) / f(x) along an upper-tail grid.

    Returns a list of (x, g, valid) where ``valid`` flags points at which the
    truncation bounds are small relative to the quantities in the ratio.
    """
    rows = []
    for x in np.asarray(x_grid, dtype=float):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f = float(series_pdf(s, x))
            surv = float(series_survival(s, x))
        cdf_err = float(cdf_truncation_bound(s, x))
        pdf_err = float(pdf_truncation_bound(s, x))
        valid = (
            f > 0.0
            and surv > 0.0
            and cdf_err <= 1e-3 * surv
            and pdf_err <= 1e-3 * f
        )
        rows.append((float(x), surv / f if f > 0 else math.inf, valid))
    return rows


def gumbel_cdf_distance(s: MoschopoulosSeries, M: int, sample_size: int,
                        rng: np.random.Generator,
                        chunk: int = 10**7) -> float:
    """KS distance of normalized sample maxima from the standard Gumbel CDF."""
    if M < 2:
        raise ValueError("M must be at least 2")
    gp = gumbel_params_series(s, M)
    maxima = np.empty(sample_size)
    done = 0
    rows_per_chunk = max(1, chunk // M)
    while done < sample_size:
        m = min(rows_per_chunk, sample_size - done)
        maxima[done:done + m] = sample(s, rng, (m, M)).max(axis=1)
        done += m
    z = (maxima - gp.bM) / gp.aM
    emp = EmpiricalDistribution(z)
    return emp.ks_statistic(lambda t: np.exp(-np.exp(-t)))


def termwise_position_parameter(s: MoschopoulosSeries, M: int) -> float:
    """Diagnostic: prefactor * sum_k delta_k * P^{-1}(rho + k, (1 - 1/M)/beta_min).

    This applies the inverse regularized gamma inside the mixture sum, which
    is not the same thing as inverting the mixture CDF; it is recorded so the
    two can be compared.  NaN when (1 - 1/M)/beta_min falls outside (0, 1),
    where the expression is not evaluable at all.
    """
    q = (1.0 - 1.0 / M) / s.beta_min
    if not 0.0 < q < 1.0:
        return math.nan
    weights = np.exp(s.log_prefactor + s.log_deltas)
    total = 0.0
    for k in range(s.h):
        if weights[k] > 0.0:
            total += weights[k] * inverse_regularized_gamma_p(s.rho + k, q)
    return total
