"""First and second moments of per-subcarrier capacity, and Gamma matching.

Means come in closed form (incomplete-gamma terms plus one residual
semi-infinite integral for the interference case, done by adaptive
quadrature).  Second moments follow the integration-by-parts identity

    E[C^2] = int_0^inf 2 log(1+s)/(1+s) * (1 - F_S(s)) ds

evaluated with the Chebyshev rule from specfun (order 50 by default).  The
mean/variance pair is then matched to a Gamma(alpha, beta) law, which is what
the sum-of-capacities machinery consumes.

Both closed-form means have removable singularities (Pn -> Pm for the
interference case, psi -> eta for the no-interference case); those route to a
numeric limit branch and the exact L'Hopital limit respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .fading import LinkParams, cdf_sinr_interference, cdf_sinr_nointerference
from .specfun import QuadratureRule, e1_scaled, gcq_rule, upper_incomplete_gamma

DEFAULT_GCQ_ORDER = 50

_EQUAL_POWER_REL = 1e-6   # |1 - Pn/Pm| below this: integrate directly
_EQUAL_PSI_ETA_REL = 1e-9  # |psi - eta| below this (relative to eta): limit form


@dataclass(frozen=True)
class GammaParams:
    """Shape/scale pair of a moment-matched Gamma capacity law."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Gamma parameters must be positive")

    @property
    def mean(self) -> float:
        return self.alpha * self.beta

    @property
    def variance(self) -> float:
        return self.alpha * self.beta**2


@dataclass(frozen=True)
class CapacityMoments:
    mean: float
    second_moment: float

    def __post_init__(self):
        if self.variance < -1e-10 * max(self.second_moment, 1.0):
            raise ValueError("second moment smaller than squared mean")

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2


def _mean_by_tail_integral(cdf, lp: LinkParams) -> float:
    """E[log(1+S)] = int (1 - F_S(x)) / (1+x) dx, the defining identity."""
    val, _ = quad(lambda x: (1.0 - cdf(x, lp)) / (1.0 + x), 0.0, math.inf,
                  limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def mean_capacity_interference(lp: LinkParams, rel_tol: float = 1e-7) -> float:
    """Average capacity of a collided subcarrier (nats/s/Hz).

    Closed incomplete-gamma part plus the residual integral, which is
    evaluated on the exp-cancelled integrand

        (psi/Pn) e^{-eta x/Pm - psi/Pm} e1_scaled(G(x)) / (x (1+x)).
    """
    if abs(1.0 - lp.Pn / lp.Pm) < _EQUAL_POWER_REL:
        return _mean_by_tail_integral(cdf_sinr_interference, lp)
    lead = (1.0 - math.exp(-lp.psi / lp.Pm)) / (1.0 - lp.Pn / lp.Pm) * (
        e1_scaled(lp.eta / lp.Pm) - e1_scaled(lp.eta / lp.Pn)
    )

    def integrand(x: float) -> float:
        g = (lp.eta + lp.psi / x) * (1.0 / lp.Pn + x / lp.Pm)
        return (
            (lp.psi / lp.Pn)
            * math.exp(-lp.eta * x / lp.Pm - lp.psi / lp.Pm)
            * e1_scaled(g)
            / (x * (1.0 + x))
        )

    resid, _ = quad(integrand, 0.0, math.inf, limit=400,
                    epsabs=1e-12, epsrel=rel_tol * 1e-2)
    return lead + resid


def mean_capacity_nointerference(lp: LinkParams) -> float:
    """Average capacity of a collision-free subcarrier (nats/s/Hz)."""
    if abs(lp.psi - lp.eta) < _EQUAL_PSI_ETA_REL * lp.eta:
        # L'Hopital limit of the (psi - eta) factor
        e1 = upper_incomplete_gamma(0.0, lp.eta / lp.Pm)
        return e1 * (math.exp(lp.eta / lp.Pm) - lp.eta / lp.Pm - 1.0) + math.exp(
            -lp.eta / lp.Pm
        )
    return e1_scaled(lp.eta / lp.Pm) * (
        1.0 + math.exp(-lp.psi / lp.Pm) * lp.eta / (lp.psi - lp.eta)
    ) + lp.psi / (lp.eta - lp.psi) * upper_incomplete_gamma(0.0, lp.psi / lp.Pm)


def _second_moment(cdf, lp: LinkParams, rule: QuadratureRule) -> float:
    s = rule.nodes
    integrand = 2.0 * np.log1p(s) / (1.0 + s) * (1.0 - cdf(s, lp))
    return float(np.sum(rule.weights * integrand))


def second_moment_interference(lp: LinkParams, rule: QuadratureRule) -> float:
    """E[(log(1+S^I))^2] via the Chebyshev rule on the tail-integral form."""
    return _second_moment(cdf_sinr_interference, lp, rule)


def second_moment_nointerference(lp: LinkParams, rule: QuadratureRule) -> float:
    return _second_moment(cdf_sinr_nointerference, lp, rule)


def match_gamma(m: CapacityMoments) -> GammaParams:
    """Gamma law with the same first two moments: alpha = mean^2/var, beta = var/mean."""
    if m.mean <= 0:
        raise ValueError("mean must be positive to fit a Gamma law")
    if m.variance <= 0:
        raise ValueError("zero or negative variance: degenerate Gamma fit")
    return GammaParams(alpha=m.mean**2 / m.variance, beta=m.variance / m.mean)


@lru_cache(maxsize=512)
def capacity_moments_interference(lp: LinkParams,
                                  order: int = DEFAULT_GCQ_ORDER) -> CapacityMoments:
    return CapacityMoments(
        mean=mean_capacity_interference(lp),
        second_moment=second_moment_interference(lp, gcq_rule(order)),
    )


@lru_cache(maxsize=512)
def capacity_moments_nointerference(lp: LinkParams,
                                    order: int = DEFAULT_GCQ_ORDER) -> CapacityMoments:
    return CapacityMoments(
        mean=mean_capacity_nointerference(lp),
        second_moment=second_moment_nointerference(lp, gcq_rule(order)),
    )


def fit_capacity_gammas(links, order: int = DEFAULT_GCQ_ORDER):
    """Per-PU interference fits plus the shared no-interference fit.

    ``links`` is one LinkParams per PU; Pm/psi/eta must agree across them (the
    SU is common), so the no-interference law is taken from the first entry.
    """
    links = tuple(links)
    if not links:
        raise ValueError("at least one link is required")
    fits_i = tuple(
        match_gamma(capacity_moments_interference(lp, order)) for lp in links
    )
    fit_ni = match_gamma(capacity_moments_nointerference(links[0], order))
    return fits_i, fit_ni
