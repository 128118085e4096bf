"""Independent Monte Carlo engine: channels, capacity realizations, ECDF tools.

Everything analytic in this package has a same-parameter simulation
counterpart built from the pieces here.  Reproducibility contract: a SeedSpec
(master seed + stream index) pins the byte-exact output of any simulation,
and distinct stream indices give statistically independent streams, so
parallel workers can be seeded as streams of one master seed regardless of
how work is scheduled.

Exponential variates are drawn by inverse CDF (-log(1 - U)); the monotone
coupling this induces is what makes paired-seed comparisons between scheduler
variants meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fading import adapted_power
from .meancap import SystemConfig


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus worker stream index; the unit of reproducibility."""

    master_seed: int
    stream_id: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.master_seed, self.stream_id])

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


def make_rng(seed: SeedSpec | int | None) -> np.random.Generator:
    if isinstance(seed, SeedSpec):
        return seed.rng()
    return np.random.default_rng(seed)


def exponential(rng: np.random.Generator, size=None):
    """Unit-mean exponential draws via the inverse CDF."""
    return -np.log1p(-rng.random(size))


@dataclass(frozen=True)
class ChannelDraw:
    """Per-subcarrier unit-mean power gains: desired, SU->PU, PU->SU."""

    h_m: np.ndarray
    h_mp: np.ndarray
    g_ns: np.ndarray


def draw_channels(count: int, rng: np.random.Generator) -> ChannelDraw:
    if count < 1:
        raise ValueError("count must be >= 1")
    return ChannelDraw(
        h_m=exponential(rng, count),
        h_mp=exponential(rng, count),
        g_ns=exponential(rng, count),
    )


def realize_capacity(cfg: SystemConfig, kv, draws: ChannelDraw) -> float:
    """Instantaneous SU capacity for one collision vector and channel draw.

    Subcarriers are laid out as the k_1 collided with PU 1, then k_2 with
    PU 2, ..., then the kf collision-free ones.  Collided subcarriers see
    P_n * g interference in the SINR denominator; free ones only noise.
    """
    k = tuple(kv.k)
    if sum(k) + kv.kf != len(draws.h_m):
        raise ValueError("draws must provide one channel triple per subcarrier")
    lp0 = cfg.links[0]
    lam = draws.h_m * adapted_power(lp0.Pm, lp0.psi, draws.h_mp)
    pn = np.concatenate([
        np.full(k_n, cfg.links[n].Pn) for n, k_n in enumerate(k)
    ] + [np.zeros(kv.kf)]) if len(lam) else np.zeros(0)
    sinr = lam / (pn * draws.g_ns + lp0.eta)
    return float(np.sum(np.log1p(sinr)))


def capacity_samples(cfg: SystemConfig, rng: np.random.Generator,
                     n: int) -> np.ndarray:
    """n independent SU capacity realizations with random collision vectors.

    Vectorized full chain: sample the collision vector, then the channels,
    then sum log(1 + SINR) row-wise.
    """
    from .collision import mvhypergeom_sample  # local import avoids cycle

    if cfg.Fs == 0:
        return np.zeros(n)
    kmat = mvhypergeom_sample(cfg.Fs, cfg.pool, rng, size=n)  # (n, N+1)
    lp0 = cfg.links[0]
    h_m = exponential(rng, (n, cfg.Fs))
    h_mp = exponential(rng, (n, cfg.Fs))
    g = exponential(rng, (n, cfg.Fs))
    lam = h_m * np.minimum(lp0.Pm, lp0.psi / h_mp)
    # owner of column j in row i: smallest n with j < cumsum(k)_n, free past sum(k)
    cum = np.cumsum(kmat[:, :-1], axis=1)
    cols = np.arange(cfg.Fs)[None, :]
    owner = (cols[:, :, None] >= cum[:, None, :]).sum(axis=2)  # (n, Fs) in 0..N
    pn_vec = np.array([lp.Pn for lp in cfg.links] + [0.0])
    sinr = lam / (pn_vec[owner] * g + lp0.eta)
    return np.log1p(sinr).sum(axis=1)


def subcarrier_capacity_samples(lp, rng: np.random.Generator, n: int,
                                interference: bool) -> np.ndarray:
    """Per-subcarrier capacity draws log(1 + S) for one link."""
    h_m = exponential(rng, n)
    h_mp = exponential(rng, n)
    lam = h_m * np.minimum(lp.Pm, lp.psi / h_mp)
    if interference:
        denom = lp.Pn * exponential(rng, n) + lp.eta
    else:
        denom = lp.eta
    return np.log1p(lam / denom)


# ---------------------------------------------------------------------------
# empirical-distribution utilities
# ---------------------------------------------------------------------------

class EmpiricalDistribution:
    """Sorted-sample ECDF with histogram and Kolmogorov-Smirnov helpers."""

    def __init__(self, samples):
        data = np.sort(np.asarray(samples, dtype=float))
        if data.size < 2:
            raise ValueError("need at least two samples")
        if data[0] == data[-1]:
            raise ValueError("degenerate sample: all values equal")
        self.data = data
        self.n = data.size

    def ecdf(self, x):
        xs = np.asarray(x, dtype=float)
        return np.searchsorted(self.data, xs, side="right") / self.n

    def histogram(self):
        """Freedman-Diaconis density histogram: (densities, bin_edges)."""
        counts, edges = np.histogram(self.data, bins="fd", density=True)
        return counts, edges

    def ks_statistic(self, cdf) -> float:
        """One-sample KS distance against a vectorized model CDF."""
        f = np.asarray(cdf(self.data), dtype=float)
        i = np.arange(1, self.n + 1)
        return float(np.max(np.maximum(i / self.n - f, f - (i - 1) / self.n)))

    def ks_two_sample(self, other: "EmpiricalDistribution") -> float:
        grid = np.concatenate([self.data, other.data])
        return float(np.max(np.abs(self.ecdf(grid) - other.ecdf(grid))))


def dkw_band(n: int, alpha: float = 0.01) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz (1-alpha) confidence band."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
