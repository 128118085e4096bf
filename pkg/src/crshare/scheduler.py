"""Centralized sequential random subcarrier allocation with opportunistic picks.

One scheduling round assigns M_hat of the M candidate SUs, one per step:

1. sample F^S subcarriers uniformly without replacement from the remaining
   pool (collisions with the PU blocks are whatever they are -- the scheduler
   is blind to occupancy),
2. offer the sampled set to every not-yet-selected SU; each evaluates its
   instantaneous capacity on it (independent channel realizations per SU and
   subcarrier),
3. select the SU with the best capacity (ties broken toward the lowest
   index), and
4. remove the sampled set from the pool, so assignments stay orthogonal.

``run_arbitrary`` keeps the identical sequential-orthogonal allocation but
selects SUs in fixed index order and only ever draws channels for the
selected SU (its result is therefore independent of M).  The colliding
baseline drops orthogonality entirely: all M SUs draw their sets
independently from the full pool and doubly-used subcarriers suffer mutual
SU interference.

Randomness is split between an allocation stream and a channel stream so that
paired-master-seed comparisons across variants share their allocation
sequences.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .capmoments import DEFAULT_GCQ_ORDER, fit_capacity_gammas
from .collision import (
    CollisionVector,
    hypergeom_pmf,
    hypergeom_support,
    sequential_pmf,
    sequential_support,
)
from .extremes import asymptotic_max_capacity, gumbel_params_series
from .mcsim import exponential
from .meancap import SystemConfig
from .moschopoulos import DEFAULT_TRUNCATION, conditional_capacity_series


@dataclass
class AllocationState:
    """Bookkeeping for one scheduling round over explicit subcarrier ids."""

    pu_of: np.ndarray                # owner PU index per id, -1 if free of PU
    available: np.ndarray            # ids still assignable to SUs
    assigned: list = field(default_factory=list)
    selected: list = field(default_factory=list)

    def check_invariants(self) -> None:
        taken = np.concatenate(self.assigned) if self.assigned else np.empty(0, int)
        if len(np.unique(taken)) != len(taken):
            raise AssertionError("assigned sets overlap")
        if np.intersect1d(taken, self.available).size:
            raise AssertionError("assigned subcarriers still marked available")
        if len(set(self.selected)) != len(self.selected):
            raise AssertionError("an SU was selected twice")


@dataclass(frozen=True)
class ScheduleResult:
    """Outcome of one scheduling round."""

    selected: tuple[int, ...]
    per_su_capacity: tuple[float, ...]
    collision_log: tuple[CollisionVector, ...]

    @property
    def sum_capacity(self) -> float:
        return float(sum(self.per_su_capacity))


def _initial_state(cfg: SystemConfig) -> AllocationState:
    pu_of = np.full(cfg.F, -1, dtype=np.int64)
    start = 0
    for n, Fp_n in enumerate(cfg.pool.Fp):
        pu_of[start:start + Fp_n] = n
        start += Fp_n
    return AllocationState(pu_of=pu_of, available=np.arange(cfg.F))


def _sample_set(state: AllocationState, Fs: int, rng: np.random.Generator,
                n_pu: int) -> tuple[np.ndarray, CollisionVector]:
    sampled = rng.choice(state.available, size=Fs, replace=False)
    owners = state.pu_of[sampled]
    k = tuple(int(np.sum(owners == n)) for n in range(n_pu))
    kv = CollisionVector(k=k, kf=int(np.sum(owners == -1)))
    mask = ~np.isin(state.available, sampled)
    state.available = state.available[mask]
    state.assigned.append(sampled)
    return sampled, kv


def _check_round(cfg: SystemConfig, M: int, M_hat: int) -> None:
    if not 1 <= M_hat <= M:
        raise ValueError("need 1 <= M_hat <= M")
    if M_hat * cfg.Fs > cfg.F:
        raise ValueError(
            f"M_hat * Fs = {M_hat * cfg.Fs} exceeds the pool F = {cfg.F}"
        )


def _run_sequential(cfg: SystemConfig, M: int, M_hat: int,
                    rng: np.random.Generator,
                    channel_rng: np.random.Generator | None,
                    opportunistic: bool,
                    check: bool = False) -> ScheduleResult:
    _check_round(cfg, M, M_hat)
    if channel_rng is None:
        channel_rng = rng
    state = _initial_state(cfg)
    lp0 = cfg.links[0]
    pn_vec = np.array([lp.Pn for lp in cfg.links] + [0.0])
    remaining = list(range(M))
    capacities: list[float] = []
    collisions: list[CollisionVector] = []
    for _ in range(M_hat):
        sampled, kv = _sample_set(state, cfg.Fs, rng, cfg.n_pu)
        owners = state.pu_of[sampled]
        pn = pn_vec[np.where(owners < 0, cfg.n_pu, owners)]
        n_eval = len(remaining) if opportunistic else 1
        shape = (n_eval, cfg.Fs)
        lam = exponential(channel_rng, shape) * np.minimum(
            lp0.Pm, lp0.psi / exponential(channel_rng, shape)
        )
        sinr = lam / (pn[None, :] * exponential(channel_rng, shape) + lp0.eta)
        caps = np.log1p(sinr).sum(axis=1)
        pick = int(np.argmax(caps)) if opportunistic else 0
        winner = remaining.pop(pick)
        state.selected.append(winner)
        capacities.append(float(caps[pick]))
        collisions.append(kv)
        if check:
            state.check_invariants()
    return ScheduleResult(
        selected=tuple(state.selected),
        per_su_capacity=tuple(capacities),
        collision_log=tuple(collisions),
    )


def run_opportunistic(cfg: SystemConfig, M: int, M_hat: int,
                      rng: np.random.Generator,
                      channel_rng: np.random.Generator | None = None,
                      check: bool = False) -> ScheduleResult:
    """One round of the sequential allocator with best-capacity selection."""
    return _run_sequential(cfg, M, M_hat, rng, channel_rng,
                           opportunistic=True, check=check)


def run_arbitrary(cfg: SystemConfig, M: int, M_hat: int,
                  rng: np.random.Generator,
                  channel_rng: np.random.Generator | None = None,
                  check: bool = False) -> ScheduleResult:
    """Sequential orthogonal allocation with fixed index-order selection."""
    return _run_sequential(cfg, M, M_hat, rng, channel_rng,
                           opportunistic=False, check=check)


def run_colliding_baseline(cfg: SystemConfig, M: int, M_hat: int,
                           rng: np.random.Generator,
                           channel_rng: np.random.Generator | None = None) -> ScheduleResult:
    """No coordination: every SU samples from the full pool; overlaps interfere.

    All M SUs transmit; the sum capacity is reported over the first M_hat of
    them.  A subcarrier used by several SUs adds, for each victim, one
    adapted-power interference term per other user with fresh unit-mean
    cross gains.
    """
    _check_round(cfg, M, M_hat)
    if channel_rng is None:
        channel_rng = rng
    state = _initial_state(cfg)
    lp0 = cfg.links[0]
    pn_vec = np.array([lp.Pn for lp in cfg.links] + [0.0])
    sets = np.stack([
        rng.choice(cfg.F, size=cfg.Fs, replace=False) for _ in range(M)
    ])
    occupancy = np.bincount(sets.ravel(), minlength=cfg.F)
    capacities = []
    collisions = []
    for m in range(M_hat):
        ids = sets[m]
        owners = state.pu_of[ids]
        pn = pn_vec[np.where(owners < 0, cfg.n_pu, owners)]
        lam = exponential(channel_rng, cfg.Fs) * np.minimum(
            lp0.Pm, lp0.psi / exponential(channel_rng, cfg.Fs)
        )
        pu_interf = pn * exponential(channel_rng, cfg.Fs)
        n_other = occupancy[ids] - 1
        su_interf = np.zeros(cfg.Fs)
        total = int(n_other.sum())
        if total:
            tx = np.minimum(lp0.Pm, lp0.psi / exponential(channel_rng, total))
            cross = tx * exponential(channel_rng, total)
            which = np.repeat(np.arange(cfg.Fs), n_other)
            su_interf = np.bincount(which, weights=cross, minlength=cfg.Fs)
        sinr = lam / (pu_interf + su_interf + lp0.eta)
        capacities.append(float(np.log1p(sinr).sum()))
        k = tuple(int(np.sum(owners == n)) for n in range(cfg.n_pu))
        collisions.append(CollisionVector(k=k, kf=int(np.sum(owners == -1))))
    return ScheduleResult(
        selected=tuple(range(M_hat)),
        per_su_capacity=tuple(capacities),
        collision_log=tuple(collisions),
    )


# ---------------------------------------------------------------------------
# diagnostics against the sequential collision law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    pvalue: float
    dof: int
    observed: dict
    expected: dict


def stepwise_collision_pmf_check(cfg: SystemConfig, Fs_list, m: int,
                                 samples: int,
                                 rng: np.random.Generator) -> GoodnessOfFit:
    """Chi-square test of step-m empirical collision vectors vs the exact law.

    Drives the same sequential sampling path as the scheduler runs (channel
    draws are irrelevant to the collision counts, so none are made).
    """
    Fs_list = list(Fs_list)
    counts: dict[tuple, int] = {}
    n_pu = cfg.n_pu
    for _ in range(samples):
        state = _initial_state(cfg)
        kv = None
        for j in range(m):
            _, kv = _sample_set(state, Fs_list[j], rng, n_pu)
        key = kv.k + (kv.kf,)
        counts[key] = counts.get(key, 0) + 1
    expected = {}
    for kv in sequential_support(m, Fs_list, cfg.pool):
        p = sequential_pmf(m, Fs_list, cfg.pool, kv)
        if p > 0.0:
            expected[kv.k + (kv.kf,)] = p * samples
    stat = 0.0
    for key, exp_count in expected.items():
        obs = counts.get(key, 0)
        stat += (obs - exp_count) ** 2 / exp_count
    extra = set(counts) - set(expected)
    if extra:
        raise AssertionError(f"sampled vectors outside the exact support: {extra}")
    dof = len(expected) - 1
    return GoodnessOfFit(
        statistic=stat,
        pvalue=float(chi2.sf(stat, dof)),
        dof=dof,
        observed=counts,
        expected=expected,
    )


# ---------------------------------------------------------------------------
# sum-capacity approximation (many more users than picks)
# ---------------------------------------------------------------------------

def sum_capacity_approximation(cfg: SystemConfig, M: int, M_hat: int,
                               h: int = DEFAULT_TRUNCATION,
                               order: int = DEFAULT_GCQ_ORDER) -> float:
    """M_hat times the asymptotic first-pick mean capacity.

    At each step every remaining SU is offered the *same* sampled set, so the
    maximum is over channel randomness alone; conditioning on the step's
    collision count k gives a Gumbel asymptote b(k) + gamma * a(k), which is
    averaged over the first-step collision law.  Valid in the M >> M_hat
    regime; a warning is emitted when M < 4 * M_hat.
    """
    _check_round(cfg, M, M_hat)
    if cfg.n_pu != 1:
        raise ValueError("the approximation is defined for the single-PU round")
    if M < 4 * M_hat:
        warnings.warn(
            f"M = {M} is not large against M_hat = {M_hat}; the linear "
            "approximation degrades outside M >> M_hat",
            UserWarning, stacklevel=2,
        )
    fits_i, fit_ni = fit_capacity_gammas(cfg.links, order)
    Fp = cfg.pool.Fp[0]
    expected_max = 0.0
    for k in hypergeom_support(cfg.Fs, Fp, cfg.F):
        p = hypergeom_pmf(cfg.Fs, Fp, cfg.F, k)
        kv = CollisionVector(k=(k,), kf=cfg.Fs - k)
        series = conditional_capacity_series(fits_i, fit_ni, kv, h)
        gp = gumbel_params_series(series, M)
        expected_max += p * asymptotic_max_capacity(gp)
    return M_hat * expected_max
