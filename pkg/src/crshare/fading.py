"""Power-adapted Rayleigh SINR laws for collided and collision-free subcarriers.

The secondary transmitter caps its per-subcarrier power at psi / h_mp so the
interference it lands on the primary receiver never exceeds the interference
temperature psi.  With unit-mean exponential power gains this gives closed
forms for

* the effective received signal power  h_m * min(Pm, psi / h_mp),
* the SINR on a collided subcarrier     (PU interference Pn * g + eta), and
* the SNR on a collision-free one       (noise eta only),

plus the log(1 + SINR) change of variables to per-subcarrier capacity.

Numerics: every exp(psi/(x Pn)) * Gamma(0, big) product is evaluated through
the scaled integral e1_scaled (exp cancellation done analytically).  What
remains in the interference PDF is a genuine subtractive cancellation as
x -> 0; below ``x < psi / (Pn * _CANCEL_RATIO)`` the PDF/CDF switch to the
exact conditional-expectation form  E_g[(Pn g + eta) f_signal(x (Pn g + eta))]
evaluated by Gauss-Laguerre, which is smooth there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import e1_scaled

_CANCEL_RATIO = 1e4  # switch branches once psi / (x Pn) exceeds this
_LAGUERRE_ORDER = 128


@dataclass(frozen=True)
class LinkParams:
    """Linear-unit link parameterization shared by the distribution family.

    Pm: SU transmit power cap, Pn: interfering PU power, psi: interference
    temperature, eta: noise variance.  All strictly positive, linear watts.
    """

    Pm: float
    Pn: float
    psi: float
    eta: float

    def __post_init__(self):
        for name in ("Pm", "Pn", "psi", "eta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def adapted_power(Pm: float, psi: float, h_mp) -> float | np.ndarray:
    """Transmit power after the interference-temperature cap: min(Pm, psi/h_mp)."""
    return np.minimum(Pm, psi / np.asarray(h_mp, dtype=float))


@lru_cache(maxsize=8)
def _laguerre(order: int):
    return np.polynomial.laguerre.laggauss(order)


def _shape(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _ret(out: np.ndarray, x, scalar: bool):
    return float(out[0]) if scalar else out.reshape(np.shape(x))


# ---------------------------------------------------------------------------
# effective received signal power  h_m * min(Pm, psi / h_mp)
# ---------------------------------------------------------------------------

def cdf_signal_power(x, lp: LinkParams):
    """CDF of the power-capped received signal power."""
    xs, scalar = _shape(x)
    out = np.zeros_like(xs)
    pos = xs > 0
    xp = xs[pos]
    out[pos] = (
        1.0
        - np.exp(-xp / lp.Pm)
        + xp / (lp.psi + xp) * np.exp(-(xp + lp.psi) / lp.Pm)
    )
    return _ret(out, x, scalar)


def pdf_signal_power(x, lp: LinkParams):
    """Density of the power-capped received signal power."""
    xs, scalar = _shape(x)
    out = np.zeros_like(xs)
    pos = xs >= 0
    xp = xs[pos]
    out[pos] = (
        np.exp(-xp / lp.Pm)
        / lp.Pm
        * (
            1.0
            - np.exp(-lp.psi / lp.Pm)
            * (xp**2 + lp.psi * xp - lp.psi * lp.Pm)
            / (lp.psi + xp) ** 2
        )
    )
    return _ret(out, x, scalar)


# ---------------------------------------------------------------------------
# SINR with PU interference on a collided subcarrier
# ---------------------------------------------------------------------------

def _g_argument(x: np.ndarray, lp: LinkParams) -> np.ndarray:
    return (lp.eta + lp.psi / x) * (1.0 / lp.Pn + x / lp.Pm)


def _cdf_sinr_i_closed(x: np.ndarray, lp: LinkParams) -> np.ndarray:
    g = _g_argument(x, lp)
    t2 = (1.0 - math.exp(-lp.psi / lp.Pm)) * np.exp(-x * lp.eta / lp.Pm) / (
        1.0 + x * lp.Pn / lp.Pm
    )
    t3 = (lp.psi / (x * lp.Pn)) * np.exp(
        -lp.eta * x / lp.Pm - lp.psi / lp.Pm
    ) * e1_scaled(g)
    return 1.0 - t2 - t3


def _cdf_sinr_i_quad(x: np.ndarray, lp: LinkParams) -> np.ndarray:
    t, w = _laguerre(_LAGUERRE_ORDER)
    scale = lp.Pn * t + lp.eta
    return np.sum(w * cdf_signal_power(np.outer(x, scale), lp), axis=1)


def _pdf_sinr_i_closed(x: np.ndarray, lp: LinkParams) -> np.ndarray:
    g = _g_argument(x, lp)
    t1 = (
        (x * lp.eta * lp.Pn + lp.Pm * (lp.eta + lp.Pn))
        / (x * lp.Pn + lp.Pm) ** 2
        * (1.0 - math.exp(-lp.psi / lp.Pm))
        * np.exp(-x * lp.eta / lp.Pm)
    )
    bracket = (lp.psi + x * lp.Pn) * e1_scaled(g) + (
        x * lp.Pn * (x**2 * lp.eta * lp.Pn - lp.psi * lp.Pm)
        / ((x * lp.eta + lp.psi) * (x * lp.Pn + lp.Pm))
    )
    t2 = (
        lp.psi
        / (x**3 * lp.Pn**2)
        * np.exp(-lp.eta * x / lp.Pm - lp.psi / lp.Pm)
        * bracket
    )
    return t1 + t2


def _pdf_sinr_i_quad(x: np.ndarray, lp: LinkParams) -> np.ndarray:
    t, w = _laguerre(_LAGUERRE_ORDER)
    scale = lp.Pn * t + lp.eta
    return np.sum(w * scale * pdf_signal_power(np.outer(x, scale), lp), axis=1)


def cdf_sinr_interference(x, lp: LinkParams):
    """CDF of SINR on a subcarrier collided with an interfering PU."""
    xs, scalar = _shape(x)
    out = np.zeros_like(xs)
    pos = xs > 0
    if pos.any():
        xp = xs[pos]
        small = xp < lp.psi / (lp.Pn * _CANCEL_RATIO)
        vals = np.empty_like(xp)
        if small.any():
            vals[small] = _cdf_sinr_i_quad(xp[small], lp)
        if (~small).any():
            vals[~small] = _cdf_sinr_i_closed(xp[~small], lp)
        out[pos] = np.clip(vals, 0.0, 1.0)
    return _ret(out, x, scalar)


def pdf_sinr_interference(x, lp: LinkParams):
    """Density of SINR on a collided subcarrier; never NaN near x = 0."""
    xs, scalar = _shape(x)
    out = np.zeros_like(xs)
    pos = xs > 0
    if pos.any():
        xp = xs[pos]
        small = xp < lp.psi / (lp.Pn * _CANCEL_RATIO)
        vals = np.empty_like(xp)
        if small.any():
            vals[small] = _pdf_sinr_i_quad(xp[small], lp)
        if (~small).any():
            vals[~small] = _pdf_sinr_i_closed(xp[~small], lp)
        out[pos] = np.maximum(vals, 0.0)
    return _ret(out, x, scalar)


# ---------------------------------------------------------------------------
# SNR without PU interference (collision-free subcarrier)
# ---------------------------------------------------------------------------

def cdf_sinr_nointerference(x, lp: LinkParams):
    """CDF of the collision-free SNR: the signal-power CDF at eta * x."""
    return cdf_signal_power(np.asarray(x, dtype=float) * lp.eta, lp)


def pdf_sinr_nointerference(x, lp: LinkParams):
    """Density of the collision-free SNR: eta * pdf_signal_power(eta * x)."""
    return lp.eta * pdf_signal_power(np.asarray(x, dtype=float) * lp.eta, lp)


# ---------------------------------------------------------------------------
# capacity transform
# ---------------------------------------------------------------------------

def capacity_pdf_transform(pdf_sinr):
    """Map an SINR density to the density of log(1 + SINR) in nats/s/Hz."""

    def pdf_capacity(x):
        xs = np.asarray(x, dtype=float)
        return np.exp(xs) * pdf_sinr(np.expm1(xs))

    return pdf_capacity
