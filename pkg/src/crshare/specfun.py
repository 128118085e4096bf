"""Incomplete-gamma family and semi-infinite Chebyshev quadrature.

Everything downstream (capacity CDFs, sum-of-Gamma series, extreme-value
position parameters) is built from the four primitives in this module:

* ``upper_incomplete_gamma`` -- unregularized Gamma(a, x), including the a = 0
  exponential-integral case,
* ``regularized_gamma_p`` -- P(a, x) = gammainc_lower(a, x) / Gamma(a),
* ``inverse_regularized_gamma_p`` -- the functional inverse of P in x,
* ``gcq_rule`` -- a positive-weight Chebyshev rule for integrals over (0, inf).

The gamma functions use the classical split: power series for x < a + 1 and a
modified-Lentz continued fraction otherwise.  Both branches are vectorized over
x (a stays scalar), since the distribution code evaluates them on large sample
arrays.  ``e1_scaled`` exposes exp(x) * Gamma(0, x), which the fading formulas
need to avoid exp-overflow against Gamma-underflow products.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015329

_EPS = np.finfo(float).eps
_TINY = 1e-300
_MAX_ITER = 1000


class SpecFunError(ArithmeticError):
    """An iteration failed to converge; the result would be unreliable."""


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


# ---------------------------------------------------------------------------
# series / continued-fraction kernels (vectorized over x, scalar a)
# ---------------------------------------------------------------------------

def _lower_series(a: float, x: np.ndarray) -> np.ndarray:
    """P(a, x) by the lower-incomplete power series; requires x < a + 1.

    Iterates on a shrinking active subset so large sample arrays only pay for
    their slowest-converging entries.
    """
    if x.size == 0:
        return np.empty_like(x)
    total_full = np.empty_like(x)
    idx = np.arange(x.size)
    xa = x.copy()
    term = np.full_like(xa, 1.0 / a)
    total = term.copy()
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term = term * xa / ap
        total += term
        done = np.abs(term) <= np.abs(total) * _EPS
        if done.any():
            total_full[idx[done]] = total[done]
            keep = ~done
            idx, xa, term, total = idx[keep], xa[keep], term[keep], total[keep]
            if idx.size == 0:
                break
    else:
        raise SpecFunError(f"lower-gamma series stalled for a={a}")
    log_scale = -x + a * np.log(np.maximum(x, _TINY)) - math.lgamma(a)
    out = total_full * np.exp(log_scale)
    return np.where(x == 0.0, 0.0, out)


def _upper_cf(a: float, x: np.ndarray) -> np.ndarray:
    """Continued fraction for exp(x) * x^(-a) * Gamma(a, x); wants x > a + 1.

    Modified Lentz evaluation of Gamma(a, x) = e^(-x) x^a * CF(a, x); the CF
    value itself is returned so callers can pick their own scaling.  Converged
    entries are retired from the iteration.
    """
    if x.size == 0:
        return np.empty_like(x)
    out = np.empty_like(x)
    idx = np.arange(x.size)
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d[np.abs(d) < _TINY] = _TINY
        c = b + an / c
        c[np.abs(c) < _TINY] = _TINY
        d = 1.0 / d
        delta = d * c
        h = h * delta
        done = np.abs(delta - 1.0) <= _EPS
        if done.any():
            out[idx[done]] = h[done]
            keep = ~done
            idx, b, c, d, h = idx[keep], b[keep], c[keep], d[keep], h[keep]
            if idx.size == 0:
                return out
    raise SpecFunError(f"upper-gamma continued fraction stalled for a={a}")


def _e1_series(x: np.ndarray) -> np.ndarray:
    """E1(x) = Gamma(0, x) by its convergent series; accurate for x <= 1."""
    total = -EULER_GAMMA - np.log(x)
    term = np.ones_like(x)
    for n in range(1, _MAX_ITER):
        term = term * (-x) / n
        contrib = -term / n
        total += contrib
        # x <= 1 converges in a few dozen terms across the whole array
        if np.all(np.abs(contrib) <= np.abs(total) * _EPS):
            return total
    raise SpecFunError("E1 series stalled")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def regularized_gamma_p(a: float, x):
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise ValueError(f"shape a must be positive, got {a}")
    xs, scalar = _as_array(x)
    if (xs < 0).any():
        raise ValueError("x must be nonnegative")
    out = np.empty_like(xs)
    low = xs < a + 1.0
    if low.any():
        out[low] = _lower_series(a, xs[low])
    if (~low).any():
        xh = xs[~low]
        cf = _upper_cf(a, xh)
        q = np.exp(-xh + a * np.log(xh) - math.lgamma(a)) * cf
        out[~low] = 1.0 - q
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def regularized_gamma_q(a: float, x):
    """Complement Q(a, x) = 1 - P(a, x), keeping relative precision in the
    upper tail (the continued-fraction branch computes Q directly)."""
    if a <= 0:
        raise ValueError(f"shape a must be positive, got {a}")
    xs, scalar = _as_array(x)
    if (xs < 0).any():
        raise ValueError("x must be nonnegative")
    out = np.empty_like(xs)
    low = xs < a + 1.0
    if low.any():
        out[low] = 1.0 - _lower_series(a, xs[low])
    if (~low).any():
        xh = xs[~low]
        cf = _upper_cf(a, xh)
        out[~low] = np.exp(-xh + a * np.log(xh) - math.lgamma(a)) * cf
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def upper_incomplete_gamma(a: float, x):
    """Unregularized Gamma(a, x) for a >= 0; a = 0 gives E1(x).

    Overflow of Gamma(a) (a beyond ~171) saturates to +inf with a
    RuntimeWarning rather than raising.
    """
    if a < 0:
        raise ValueError(f"order a must be nonnegative, got {a}")
    xs, scalar = _as_array(x)
    if a == 0:
        if (xs <= 0).any():
            raise ValueError("Gamma(0, x) requires x > 0")
        out = np.empty_like(xs)
        small = xs <= 1.0
        if small.any():
            out[small] = _e1_series(xs[small])
        if (~small).any():
            out[~small] = np.exp(-xs[~small]) * _upper_cf(0.0, xs[~small])
        return float(out[0]) if scalar else out.reshape(np.shape(x))
    if (xs < 0).any():
        raise ValueError("x must be nonnegative")
    log_gamma_a = math.lgamma(a)
    if log_gamma_a >= math.log(np.finfo(float).max):
        warnings.warn(
            f"Gamma({a}) overflows double precision; saturating Gamma(a, x) to +inf",
            RuntimeWarning,
            stacklevel=2,
        )
        out = np.full_like(xs, np.inf)
        return float(out[0]) if scalar else out.reshape(np.shape(x))
    out = np.empty_like(xs)
    low = xs < a + 1.0
    if low.any():
        out[low] = math.gamma(a) * (1.0 - _lower_series(a, xs[low]))
    if (~low).any():
        xh = xs[~low]
        out[~low] = np.exp(-xh + a * np.log(xh)) * _upper_cf(a, xh)
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def e1_scaled(x):
    """exp(x) * Gamma(0, x) for x > 0, stable for arbitrarily large x."""
    xs, scalar = _as_array(x)
    if (xs <= 0).any():
        raise ValueError("e1_scaled requires x > 0")
    out = np.empty_like(xs)
    small = xs <= 1.0
    if small.any():
        out[small] = np.exp(xs[small]) * _e1_series(xs[small])
    if (~small).any():
        out[~small] = _upper_cf(0.0, xs[~small])
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def _gamma_log_pdf(a: float, x: float) -> float:
    return (a - 1.0) * math.log(x) - x - math.lgamma(a)


def inverse_regularized_gamma_p(a: float, q: float, rel_tol: float = 1e-10) -> float:
    """Solve P(a, x) = q for x, with q in (0, 1).

    Bracketing bisection down to a narrow interval, then Newton polish.  The
    initial bracket [1e-12, a + 10 sqrt(a) + 50] covers the mass of every
    shape we meet; it is grown geometrically if q lies beyond it.  Raises
    SpecFunError instead of returning a silent non-answer.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    lo, hi = 1e-12, a + 10.0 * math.sqrt(a) + 50.0
    for _ in range(200):
        if regularized_gamma_p(a, hi) >= q:
            break
        hi *= 2.0
    else:
        raise SpecFunError("could not bracket the inverse of P")
    if regularized_gamma_p(a, lo) > q:
        # mass below 1e-12 exceeds q: shrink the left edge instead
        while lo > 5e-324 and regularized_gamma_p(a, lo) > q:
            lo *= 1e-2
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if regularized_gamma_p(a, mid) < q:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(100):
        f = regularized_gamma_p(a, x) - q
        dpdx = math.exp(_gamma_log_pdf(a, x))
        if dpdx <= 0.0:
            break
        step = f / dpdx
        x_new = x - step
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if f > 0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        if abs(x_new - x) <= rel_tol * abs(x_new):
            return x_new
        x = x_new
    # Newton can stall only in flat tails; fall back to tight bisection.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if regularized_gamma_p(a, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * max(abs(lo), 1e-12):
            return 0.5 * (lo + hi)
    raise SpecFunError(f"inverse P(a={a}, q={q}) did not converge")


def inverse_regularized_gamma_p_small_q(a: float, q: float) -> float:
    """Diagnostic inversion of the small-x limit P(a, x) ~ x^a / (a Gamma(a)).

    Only meaningful when the answer is near zero; the exact inverse above is
    the supported path.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return math.exp((math.log(q) + math.log(a) + math.lgamma(a)) / a)


# ---------------------------------------------------------------------------
# Gauss-Chebyshev quadrature over (0, inf)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integrals of the form int_0^inf g(s) ds."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.order < 1 or len(nodes) != self.order or len(weights) != self.order:
            raise ValueError("nodes/weights length must equal order")
        if (nodes <= 0).any() or (np.diff(nodes) <= 0).any():
            raise ValueError("nodes must be strictly increasing and positive")
        if (weights <= 0).any():
            raise ValueError("weights must be positive")

    def integrate(self, g) -> float:
        return float(np.sum(self.weights * g(self.nodes)))


def gcq_rule(order: int) -> QuadratureRule:
    """Chebyshev-node rule for semi-infinite integrals.

    First-kind Chebyshev abscissas carry Fejer interpolatory weights (all
    positive, no endpoint nodes) and are pushed to (0, inf) through the
    squared tangent map s = tan^2(pi (1 + t) / 4).  Squaring roughly doubles
    the dynamic range of the node set (order 50 reaches past 1e6), which the
    slowly-decaying capacity tail integrands at high transmit power need; at
    order 50 the rule integrates e^(-s) to ~1e-10, far inside the documented
    1e-6 contract, and halving/doubling the order moves the benchmark error
    monotonically.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    n = order
    k = np.arange(1, n + 1)
    theta = (2 * k - 1) * np.pi / (2 * n)
    t = np.cos(theta)
    m = np.arange(1, n // 2 + 1)
    if m.size:
        corr = 2.0 * np.sum(
            np.cos(2.0 * np.outer(m, theta)) / (4.0 * m[:, None] ** 2 - 1.0), axis=0
        )
    else:
        corr = np.zeros_like(theta)
    w_fejer = (2.0 / n) * (1.0 - corr)
    half = np.pi / 4.0 * (1.0 + t)
    tan_half = np.tan(half)
    nodes = tan_half**2
    weights = w_fejer * 2.0 * tan_half * (np.pi / 4.0) / np.cos(half) ** 2
    idx = np.argsort(nodes)
    return QuadratureRule(nodes=nodes[idx], weights=weights[idx], order=n)
