"""Single-Gamma-series law for sums of independent Gamma variates.

A sum of independent Gamma(alpha_s, beta_s) variates (arbitrary positive
shapes and scales, repeats allowed) has the classical Moschopoulos
representation: a mixture of Gamma(rho + k, beta_min) laws, k = 0, 1, ...,
with rho = sum(alpha_s), mixture weights  prefactor * delta_k,  where

    prefactor = prod (beta_min / beta_s)^alpha_s,
    delta_0 = 1,
    (k+1) delta_{k+1} = sum_{i=1}^{k+1} [sum_s alpha_s (1 - beta_min/beta_s)^i]
                        * delta_{k+1-i}.

All weights are nonnegative and sum to one, which yields a computable
truncation bound: with W_h = 1 - prefactor * sum_{k<h} delta_k,

    0 <= F(y) - F_h(y) <= W_h * P(rho + h, y / beta_min)
    0 <= f(y) - f_h(y) <= W_h * max_{k >= h} gamma_pdf(rho + k, beta_min)(y).

The delta recursion runs in log space (rho + k easily passes 150 for
realistic subcarrier counts) and series terms are accumulated with
compensated summation.

On top of the generic series sit the capacity laws: conditional on a
collision vector the SU capacity is the sum over component Gamma fits, and
the marginal law is the collision-PMF mixture of those conditional series.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .capmoments import GammaParams
from .collision import (
    ENUMERATION_BUDGET,
    CollisionVector,
    EnumerationBudgetWarning,
    mvhypergeom_pmf,
    mvhypergeom_sample,
    mvhypergeom_support,
)
from .meancap import SystemConfig
from .specfun import regularized_gamma_p, regularized_gamma_q

DEFAULT_TRUNCATION = 25

#: returned by conditional_capacity_pdf when the collision vector is empty
#: (Fs = 0): the capacity is identically zero.
POINT_MASS_AT_ZERO = object()


class TruncationWarning(UserWarning):
    """The series truncation bound exceeds the requested tolerance."""


@dataclass(frozen=True)
class MoschopoulosSeries:
    """Precomputed coefficients of one sum-of-Gamma law.

    ``log_deltas`` stores log(delta_k) (delta_0 = 1 always); ``components``
    keeps the (shape, scale) pairs so the law can be sampled exactly and its
    mean recovered without quadrature.
    """

    beta_min: float
    rho: float
    log_deltas: np.ndarray
    log_prefactor: float
    h: int
    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "log_deltas",
                           np.asarray(self.log_deltas, dtype=float))
        if self.h < 1 or len(self.log_deltas) != self.h:
            raise ValueError("log_deltas length must equal truncation h")
        if self.beta_min <= 0 or self.rho <= 0:
            raise ValueError("beta_min and aggregate shape must be positive")

    @property
    def deltas(self) -> np.ndarray:
        return np.exp(self.log_deltas)

    @property
    def scale_prefactor(self) -> float:
        return math.exp(self.log_prefactor)

    @property
    def mean(self) -> float:
        return sum(a * b for a, b in self.components)

    @property
    def tail_weight(self) -> float:
        """Mixture weight beyond the truncation: 1 - prefactor * sum(delta)."""
        total = np.exp(self.log_prefactor + self.log_deltas).sum()
        return max(0.0, 1.0 - total)


def build_series(components, h: int = DEFAULT_TRUNCATION) -> MoschopoulosSeries:
    """Compute the delta coefficients for a list of GammaParams (or (a, b) pairs)."""
    comps = tuple(
        (c.alpha, c.beta) if isinstance(c, GammaParams) else (float(c[0]), float(c[1]))
        for c in components
    )
    if not comps:
        raise ValueError("component list must not be empty")
    if h < 1:
        raise ValueError("truncation h must be >= 1")
    if any(a <= 0 or b <= 0 for a, b in comps):
        raise ValueError("component shapes and scales must be positive")
    beta_min = min(b for _, b in comps)
    rho = sum(a for a, _ in comps)
    alphas = np.array([a for a, _ in comps])
    ratios = 1.0 - beta_min / np.array([b for _, b in comps])  # in [0, 1)
    # gamma_i = sum_s alpha_s ratio_s^i, i = 1..h-1
    if h > 1:
        powers = ratios[None, :] ** np.arange(1, h)[:, None]
        gammas = powers @ alphas
    else:
        gammas = np.empty(0)
    with np.errstate(divide="ignore"):
        log_gammas = np.log(gammas) if gammas.size else gammas
    log_d = np.full(h, -np.inf)
    log_d[0] = 0.0
    for k in range(h - 1):
        # log delta_{k+1} = logsumexp_i(log gamma_i + log delta_{k+1-i}) - log(k+1)
        terms = log_gammas[: k + 1] + log_d[k::-1]
        m = terms.max()
        if m == -np.inf:
            log_d[k + 1] = -np.inf
        else:
            log_d[k + 1] = m + math.log(np.exp(terms - m).sum()) - math.log(k + 1)
    log_pref = float(np.sum(alphas * np.log(beta_min / np.array([b for _, b in comps]))))
    return MoschopoulosSeries(
        beta_min=beta_min, rho=rho, log_deltas=log_d,
        log_prefactor=log_pref, h=h, components=comps,
    )


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _eval_terms_pdf(s: MoschopoulosSeries, y: np.ndarray) -> np.ndarray:
    """Stack of per-k pdf terms, shape (h, len(y)); computed in log space."""
    ks = np.arange(s.h)
    a = s.rho + ks
    lg = gammaln(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_y = np.log(y)
    log_terms = (
        s.log_prefactor
        + s.log_deltas[:, None]
        + (a[:, None] - 1.0) * log_y[None, :]
        - y[None, :] / s.beta_min
        - a[:, None] * math.log(s.beta_min)
        - lg[:, None]
    )
    terms = np.exp(log_terms)
    terms[:, y <= 0] = 0.0
    return terms


def series_pdf(s: MoschopoulosSeries, y, tol: float = 1e-8):
    """Truncated series density; warns when the truncation bound exceeds tol."""
    ys, scalar = _shape(y)
    terms = _eval_terms_pdf(s, ys)
    if scalar:
        out = np.array([math.fsum(terms[:, 0])])
    else:
        out = terms.sum(axis=0)  # positive terms, pairwise accumulation
    if s.tail_weight > tol:  # otherwise no point can violate the bound
        _warn_if_loose(pdf_truncation_bound(s, ys), tol, "pdf")
    return _ret(out, y, scalar)


def series_cdf(s: MoschopoulosSeries, y, tol: float = 1e-8):
    """Truncated series CDF via regularized lower gamma terms; clamped to [0, 1]
    only where the truncation bound is below tol."""
    ys, scalar = _shape(y)
    weights = np.exp(s.log_prefactor + s.log_deltas)
    out = np.zeros(ys.shape)
    pos = ys > 0
    if pos.any():
        yy = ys[pos] / s.beta_min
        # march P(rho+k, yy) down the recurrence
        # P(a+1, x) = P(a, x) - x^a e^(-x) / Gamma(a+1); one exp per term
        # instead of a full incomplete-gamma evaluation
        p_k = regularized_gamma_p(s.rho, yy)
        if np.isscalar(p_k):
            p_k = np.array([p_k])
        log_yy = np.log(yy)
        acc = weights[0] * p_k
        for k in range(1, s.h):
            a = s.rho + k - 1.0
            step = np.exp(a * log_yy - yy - math.lgamma(a + 1.0))
            p_k = np.maximum(p_k - step, 0.0)
            if weights[k] > 0.0:
                acc += weights[k] * p_k
        out[pos] = acc
    if s.tail_weight > tol:
        bound = cdf_truncation_bound(s, ys)
        _warn_if_loose(bound, tol, "cdf")
        ok = bound <= tol
        out[ok & (out > 1.0)] = 1.0
    else:
        np.clip(out, None, 1.0, out=out)
    return _ret(out, y, scalar)


def series_survival(s: MoschopoulosSeries, y):
    """1 - F_h(y) evaluated without the cancellation of the direct subtraction.

    Sums the complements Q(rho + k, y/beta_min) upward through the recurrence
    Q(a+1, x) = Q(a, x) + x^a e^(-x)/Gamma(a+1) (all additions of positive
    terms), then adds the omitted mixture weight; the deep upper tail keeps
    full relative precision wherever the truncation is certified.
    """
    ys, scalar = _shape(y)
    weights = np.exp(s.log_prefactor + s.log_deltas)
    out = np.full(ys.shape, 1.0)
    pos = ys > 0
    if pos.any():
        yy = ys[pos] / s.beta_min
        q_k = np.atleast_1d(regularized_gamma_q(s.rho, yy))
        log_yy = np.log(yy)
        acc = weights[0] * q_k
        for k in range(1, s.h):
            a = s.rho + k - 1.0
            q_k = q_k + np.exp(a * log_yy - yy - math.lgamma(a + 1.0))
            if weights[k] > 0.0:
                acc += weights[k] * np.minimum(q_k, 1.0)
        out[pos] = np.minimum(acc + s.tail_weight, 1.0)
    return _ret(out, y, scalar)


def cdf_truncation_bound(s: MoschopoulosSeries, y):
    """Upper bound on F(y) - F_h(y): tail weight times P(rho + h, y/beta_min)."""
    ys, scalar = _shape(y)
    out = np.zeros(ys.shape)
    pos = ys > 0
    if pos.any():
        out[pos] = s.tail_weight * regularized_gamma_p(
            s.rho + s.h, ys[pos] / s.beta_min
        )
    return _ret(out, y, scalar)


def pdf_truncation_bound(s: MoschopoulosSeries, y):
    """Upper bound on f(y) - f_h(y) via the largest omitted mixture density."""
    ys, scalar = _shape(y)
    out = np.zeros(ys.shape)
    pos = ys > 0
    if pos.any() and s.tail_weight > 0.0:
        yy = ys[pos]
        # gamma_pdf(rho+k, beta_min)(y) peaks in k near y/beta_min; beyond the
        # truncation the largest term sits at k* = max(h, y/beta_min - rho).
        k_star = np.maximum(s.h, np.ceil(yy / s.beta_min - s.rho))
        a = s.rho + k_star
        log_pdf = (
            (a - 1.0) * np.log(yy)
            - yy / s.beta_min
            - a * math.log(s.beta_min)
            - gammaln(a)
        )
        out[pos] = s.tail_weight * np.exp(log_pdf)
    return _ret(out, y, scalar)


def auto_truncation(components, y_max: float, tol: float = 1e-8,
                    h: int = DEFAULT_TRUNCATION,
                    h_max: int = 4096) -> MoschopoulosSeries:
    """Double the truncation until the CDF bound at y_max drops below tol."""
    s = build_series(components, h)
    while float(cdf_truncation_bound(s, y_max)) > tol:
        if s.h >= h_max:
            warnings.warn(
                f"truncation bound {float(cdf_truncation_bound(s, y_max)):.2e} "
                f"still above {tol:.1e} at h={s.h}",
                TruncationWarning, stacklevel=2,
            )
            break
        s = build_series(components, 2 * s.h)
    return s


def sample(s: MoschopoulosSeries, rng: np.random.Generator, size) -> np.ndarray:
    """Exact draws from the law: sum the component Gamma variates."""
    out = np.zeros(size)
    for a, b in s.components:
        out = out + rng.gamma(a, b, size=size)
    return out


def _shape(y):
    arr = np.asarray(y, dtype=float)
    return np.atleast_1d(arr).astype(float), arr.ndim == 0


def _ret(out, y, scalar):
    return float(out[0]) if scalar else out.reshape(np.shape(y))


def _warn_if_loose(bound: np.ndarray, tol: float, what: str) -> None:
    worst = float(np.max(bound)) if bound.size else 0.0
    if worst > tol:
        warnings.warn(
            f"series {what} truncation bound {worst:.2e} exceeds tolerance {tol:.1e}; "
            "increase h (see auto_truncation)",
            TruncationWarning, stacklevel=3,
        )


# ---------------------------------------------------------------------------
# capacity laws
# ---------------------------------------------------------------------------

def conditional_capacity_components(fits_i, fit_ni: GammaParams,
                                    kv: CollisionVector):
    """Gamma components of the capacity sum for one collision vector.

    k_n collided subcarriers with PU n contribute Gamma(k_n * alpha_n^I,
    beta_n^I); the k_f free ones contribute Gamma(k_f * alpha^NI, beta^NI).
    Zero-count cells are dropped (a zero-shape Gamma is an empty sum).
    """
    comps = []
    for k_n, fit in zip(kv.k, fits_i):
        if k_n > 0:
            comps.append((k_n * fit.alpha, fit.beta))
    if kv.kf > 0:
        comps.append((kv.kf * fit_ni.alpha, fit_ni.beta))
    return tuple(comps)


def conditional_capacity_series(fits_i, fit_ni: GammaParams, kv: CollisionVector,
                                h: int = DEFAULT_TRUNCATION):
    comps = conditional_capacity_components(fits_i, fit_ni, kv)
    if not comps:
        return POINT_MASS_AT_ZERO
    return build_series(comps, h)


def conditional_capacity_pdf(fits_i, fit_ni: GammaParams, kv: CollisionVector,
                             h: int = DEFAULT_TRUNCATION):
    """Density of the SU capacity given its collision vector.

    Returns POINT_MASS_AT_ZERO when the vector is empty (no subcarriers).
    """
    s = conditional_capacity_series(fits_i, fit_ni, kv, h)
    if s is POINT_MASS_AT_ZERO:
        return POINT_MASS_AT_ZERO
    return lambda y: series_pdf(s, y)


def _mixture(cfg: SystemConfig, fits, h: int, budget: int,
             rng: np.random.Generator | None, mc_draws: int):
    """(weights, series list) of the collision-averaged capacity law."""
    fits_i, fit_ni = fits
    support_size = 1
    for Fp_n in cfg.pool.Fp:
        support_size *= min(cfg.Fs, Fp_n) + 1
    if support_size <= budget:
        pairs = [
            (mvhypergeom_pmf(cfg.Fs, cfg.pool, kv),
             conditional_capacity_series(fits_i, fit_ni, kv, h))
            for kv in mvhypergeom_support(cfg.Fs, cfg.pool)
        ]
        return [p for p, _ in pairs], [s for _, s in pairs]
    if rng is None:
        rng = np.random.default_rng(0)
    draws = mvhypergeom_sample(cfg.Fs, cfg.pool, rng, size=mc_draws)
    uniq, counts = np.unique(draws, axis=0, return_counts=True)
    weights = counts / mc_draws
    se = float(np.max(np.sqrt(weights * (1 - weights) / mc_draws)))
    warnings.warn(
        f"collision support ({support_size} cells) exceeds the enumeration "
        f"budget; mixture weights estimated from {mc_draws} draws "
        f"(max weight standard error {se:.2g})",
        EnumerationBudgetWarning, stacklevel=3,
    )
    series = [
        conditional_capacity_series(
            fits_i, fit_ni,
            CollisionVector(k=tuple(int(v) for v in row[:-1]), kf=int(row[-1])), h)
        for row in uniq
    ]
    return list(weights), series


def marginal_capacity_pdf(cfg: SystemConfig, fits, h: int = DEFAULT_TRUNCATION,
                          budget: int = ENUMERATION_BUDGET,
                          rng: np.random.Generator | None = None,
                          mc_draws: int = 200_000):
    """Collision-averaged capacity density: sum_kv p(kv) f(y | kv)."""
    weights, series = _mixture(cfg, fits, h, budget, rng, mc_draws)

    def pdf(y):
        ys, scalar = _shape(y)
        out = np.zeros(ys.shape)
        for w, s in zip(weights, series):
            if w == 0.0 or s is POINT_MASS_AT_ZERO:
                continue  # a point mass at zero has no density part
            out += w * series_pdf(s, ys)
        return _ret(out, y, scalar)

    return pdf


def marginal_capacity_cdf(cfg: SystemConfig, fits, h: int = DEFAULT_TRUNCATION,
                          budget: int = ENUMERATION_BUDGET,
                          rng: np.random.Generator | None = None,
                          mc_draws: int = 200_000):
    weights, series = _mixture(cfg, fits, h, budget, rng, mc_draws)

    def cdf(y):
        ys, scalar = _shape(y)
        out = np.zeros(ys.shape)
        for w, s in zip(weights, series):
            if w == 0.0:
                continue
            if s is POINT_MASS_AT_ZERO:
                out += w * (ys >= 0)
            else:
                out += w * series_cdf(s, ys)
        return _ret(out, y, scalar)

    return cdf


def marginal_capacity_mean(cfg: SystemConfig, fits,
                           budget: int = ENUMERATION_BUDGET) -> float:
    """Mixture mean by total expectation (exact given the Gamma fits)."""
    fits_i, fit_ni = fits
    total = 0.0
    for kv in mvhypergeom_support(cfg.Fs, cfg.pool):
        p = mvhypergeom_pmf(cfg.Fs, cfg.pool, kv)
        mean_kv = sum(k * f.mean for k, f in zip(kv.k, fits_i)) + kv.kf * fit_ni.mean
        total += p * mean_kv
    return total


def outage_probability(cfg: SystemConfig, fits, threshold: float,
                       h: int = DEFAULT_TRUNCATION) -> float:
    """P(capacity < threshold): the marginal CDF at the outage threshold."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if threshold == 0.0:
        return 0.0
    cdf = marginal_capacity_cdf(cfg, fits, h)
    return float(cdf(threshold))
