"""Average SU capacity under blind allocation: exact means, bounds, scaling.

The average splits combinatorics from channel statistics: with E[k] expected
collisions per PU and E[kf] expected free picks,

    E[C] = sum_n E[k_n] E[C_i^I(n)] + E[kf] E[C_i^NI]
         = (Fs / F) [ sum_n Fp_n E[C_i^I(n)] + Ff E[C_i^NI] ].

The ``*_from_moments`` variants take the per-subcarrier means as plain
numbers; they exist so the combinatorial layer can be tested against
enumeration oracles without any quadrature in the loop.  Channel moments are
memoized per LinkParams inside capmoments, so sweeping F (or Fs, Fp) costs
one moment evaluation total.
"""

from __future__ import annotations

from dataclasses import dataclass

from .capmoments import (
    DEFAULT_GCQ_ORDER,
    capacity_moments_interference,
    capacity_moments_nointerference,
)
from .collision import SubcarrierPool
from .fading import LinkParams


@dataclass(frozen=True)
class SystemConfig:
    """Primary/secondary network parameterization for one SU.

    ``links`` holds one LinkParams per PU (same Pm/psi/eta across entries --
    the SU and its cap are common; only the PU power Pn may differ).
    """

    pool: SubcarrierPool
    Fs: int
    links: tuple[LinkParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        if not self.links:
            raise ValueError("at least one PU link is required")
        if len(self.links) != self.pool.n_pu:
            raise ValueError("one LinkParams per PU is required")
        if not 0 <= self.Fs <= self.pool.F:
            raise ValueError(f"Fs={self.Fs} must lie in [0, F={self.pool.F}]")
        first = self.links[0]
        for lp in self.links[1:]:
            if (lp.Pm, lp.psi, lp.eta) != (first.Pm, first.psi, first.eta):
                raise ValueError("Pm, psi, eta must be shared across PU links")

    @property
    def F(self) -> int:
        return self.pool.F

    @property
    def n_pu(self) -> int:
        return self.pool.n_pu


def make_config(F: int, Fs: int, Fp, Pm: float, Pn, psi: float,
                eta: float) -> SystemConfig:
    """Convenience constructor from scalars (Fp / Pn may be scalar or per-PU)."""
    Fp = (Fp,) if isinstance(Fp, (int, float)) else tuple(Fp)
    Pn = (Pn,) * len(Fp) if isinstance(Pn, (int, float)) else tuple(Pn)
    if len(Pn) != len(Fp):
        raise ValueError("need one PU power per PU block")
    pool = SubcarrierPool(F=F, Fp=tuple(int(v) for v in Fp))
    links = tuple(LinkParams(Pm=Pm, Pn=p, psi=psi, eta=eta) for p in Pn)
    return SystemConfig(pool=pool, Fs=Fs, links=links)


# ---------------------------------------------------------------------------
# moment plumbing
# ---------------------------------------------------------------------------

def subcarrier_means(cfg: SystemConfig, order: int = DEFAULT_GCQ_ORDER):
    """(per-PU interference means, no-interference mean), memoized downstream."""
    means_i = tuple(
        capacity_moments_interference(lp, order).mean for lp in cfg.links
    )
    mean_ni = capacity_moments_nointerference(cfg.links[0], order).mean
    return means_i, mean_ni


# ---------------------------------------------------------------------------
# averages
# ---------------------------------------------------------------------------

def avg_capacity_single_pu_from_moments(F: int, Fs: int, Fp: int,
                                        mean_i: float, mean_ni: float) -> float:
    return Fs / F * (Fp * (mean_i - mean_ni) + F * mean_ni)


def avg_capacity_single_pu(cfg: SystemConfig, n: int = 0,
                           order: int = DEFAULT_GCQ_ORDER) -> float:
    """Average SU capacity with only the n-th PU's block occupied."""
    means_i, mean_ni = subcarrier_means(cfg, order)
    return avg_capacity_single_pu_from_moments(
        cfg.F, cfg.Fs, cfg.pool.Fp[n], means_i[n], mean_ni
    )


def avg_capacity_multi_pu_from_moments(F: int, Fs: int, Fp, means_i,
                                       mean_ni: float) -> float:
    Fp = tuple(Fp)
    occupied = sum(fp * mi for fp, mi in zip(Fp, means_i))
    return Fs / F * (occupied + (F - sum(Fp)) * mean_ni)


def avg_capacity_multi_pu(cfg: SystemConfig,
                          order: int = DEFAULT_GCQ_ORDER) -> float:
    """Average SU capacity with all N PU blocks present."""
    means_i, mean_ni = subcarrier_means(cfg, order)
    return avg_capacity_multi_pu_from_moments(
        cfg.F, cfg.Fs, cfg.pool.Fp, means_i, mean_ni
    )


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def capacity_bounds_from_moments(F: int, Fs: int, Fp: int, mean_i: float,
                                 mean_ni: float):
    """(naive_lo, naive_hi, tight_lo, tight_hi) for the single-PU average.

    Naive: every subcarrier collided / none collided.  Tight: collision count
    confined to its feasible range k in [(Fs + Fp - F)^+, min(Fs, Fp)].
    """
    k_min = max(0, Fs + Fp - F)
    k_max = min(Fs, Fp)
    naive_lo = Fs * mean_i
    naive_hi = Fs * mean_ni
    tight_lo = k_max * mean_i + (Fs - k_max) * mean_ni
    tight_hi = k_min * mean_i + (Fs - k_min) * mean_ni
    return naive_lo, naive_hi, tight_lo, tight_hi


def capacity_bounds(cfg: SystemConfig, n: int = 0,
                    order: int = DEFAULT_GCQ_ORDER):
    means_i, mean_ni = subcarrier_means(cfg, order)
    return capacity_bounds_from_moments(
        cfg.F, cfg.Fs, cfg.pool.Fp[n], means_i[n], mean_ni
    )


def capacity_bounds_multi_pu(cfg: SystemConfig, order: int = DEFAULT_GCQ_ORDER):
    """Tight multi-PU bounds by extremal feasible collision assignments.

    Lower bound: pack as many collisions as feasible, worst (smallest-mean)
    PU blocks first.  Upper bound: the unavoidable minimum of collisions,
    parked on the best PU blocks.
    """
    means_i, mean_ni = subcarrier_means(cfg, order)
    Fp = cfg.pool.Fp
    Fs = cfg.Fs

    def extremal(total: int, order_idx) -> float:
        remaining = total
        cap = 0.0
        for idx in order_idx:
            take = min(remaining, Fp[idx], Fs)
            cap += take * means_i[idx]
            remaining -= take
        return cap + (Fs - total) * mean_ni

    k_total_max = min(Fs, sum(Fp))
    k_total_min = max(0, Fs - cfg.pool.Ff)
    by_mean = sorted(range(cfg.n_pu), key=lambda i: means_i[i])
    lo = extremal(k_total_max, by_mean)            # many collisions, bad blocks first
    hi = extremal(k_total_min, list(reversed(by_mean)))  # few collisions, good blocks
    return lo, hi


# ---------------------------------------------------------------------------
# convergence diagnostics
# ---------------------------------------------------------------------------

def convergence_diagnostic(cfg: SystemConfig, n: int = 0, F_grid=(),
                           order: int = DEFAULT_GCQ_ORDER):
    """Average capacity along an F grid plus both convergence-rate ratios.

    For each F in the grid (all must fit Fs and the PU block) this emits
    (F, avg(F), |avg(F+2)-avg(F+1)| / |avg(F+1)-avg(F)|,
     |avg(F+1)-limit| / |avg(F)-limit|) where limit = Fs * E[C^NI].  Both
    ratios tend to one from below, the signature of logarithmic convergence.
    """
    means_i, mean_ni = subcarrier_means(cfg, order)
    mean_i = means_i[n]
    Fp = cfg.pool.Fp[n]
    Fs = cfg.Fs
    limit = Fs * mean_ni

    def avg(F: float) -> float:
        return avg_capacity_single_pu_from_moments(F, Fs, Fp, mean_i, mean_ni)

    rows = []
    for F in F_grid:
        if F < Fs + Fp:
            raise ValueError(f"grid point F={F} cannot host Fs + Fp subcarriers")
        a0, a1, a2 = avg(F), avg(F + 1), avg(F + 2)
        ratio_delta = abs(a2 - a1) / abs(a1 - a0)
        ratio_gap = abs(a1 - limit) / abs(a0 - limit)
        rows.append((F, a0, ratio_delta, ratio_gap))
    return rows
