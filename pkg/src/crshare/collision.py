"""Subcarrier-collision combinatorics under blind random allocation.

A secondary transmitter that picks its subcarriers uniformly without
replacement from the shared pool collides with each licensed user's block
according to a (multivariate) hypergeometric law.  This module provides the
exact PMFs, supports, moments and samplers for that law, both for a single
allocation and for the sequential orthogonal assignment used by the
centralized scheduler (where each later user draws from the depleted pool).

Binomial coefficients are evaluated in log space via lgamma so pools of
thousands of subcarriers stay in range.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

ENUMERATION_BUDGET = 10**7


class EnumerationBudgetWarning(UserWarning):
    """Exact enumeration was abandoned for Monte Carlo marginalization."""


@dataclass(frozen=True)
class SubcarrierPool:
    """Total pool of F subcarriers, per-PU occupied blocks Fp, free remainder."""

    F: int
    Fp: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "Fp", tuple(int(v) for v in self.Fp))
        if self.F < 1:
            raise ValueError("F must be >= 1")
        if any(v < 0 for v in self.Fp):
            raise ValueError("per-PU counts must be nonnegative")
        if sum(self.Fp) > self.F:
            raise ValueError("occupied subcarriers exceed the pool")

    @property
    def Ff(self) -> int:
        return self.F - sum(self.Fp)

    @property
    def n_pu(self) -> int:
        return len(self.Fp)


@dataclass(frozen=True)
class CollisionVector:
    """Per-PU collision counts plus the collision-free count for one SU."""

    k: tuple[int, ...]
    kf: int

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if any(v < 0 for v in self.k) or self.kf < 0:
            raise ValueError("collision counts must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.k) + self.kf


def _log_comb(n: int, r: int) -> float:
    if r < 0 or r > n or n < 0:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def _check_single(Fs: int, Fp: int, F: int) -> None:
    if not (0 <= Fs <= F and 0 <= Fp <= F):
        raise ValueError(f"inconsistent parameters Fs={Fs}, Fp={Fp}, F={F}")


def hypergeom_support(Fs: int, Fp: int, F: int) -> range:
    """Feasible collision counts: [(Fs + Fp - F)^+ .. min(Fs, Fp)]."""
    _check_single(Fs, Fp, F)
    return range(max(0, Fs + Fp - F), min(Fs, Fp) + 1)


def hypergeom_pmf(Fs: int, Fp: int, F: int, k: int) -> float:
    """P(k collisions) when Fs subcarriers are drawn blindly from F with Fp occupied."""
    _check_single(Fs, Fp, F)
    if k not in hypergeom_support(Fs, Fp, F):
        return 0.0
    return math.exp(_log_comb(Fp, k) + _log_comb(F - Fp, Fs - k) - _log_comb(F, Fs))


def hypergeom_mean(Fs: int, Fp: int, F: int) -> float:
    _check_single(Fs, Fp, F)
    return Fs * Fp / F


def _check_vector(Fs: int, pool: SubcarrierPool, kv: CollisionVector) -> None:
    if Fs > pool.F or Fs < 0:
        raise ValueError(f"Fs={Fs} incompatible with pool F={pool.F}")
    if len(kv.k) != pool.n_pu:
        raise ValueError("collision vector length does not match the pool")
    if kv.total != Fs:
        raise ValueError("collision vector must sum to Fs")


def mvhypergeom_pmf(Fs: int, pool: SubcarrierPool, kv: CollisionVector) -> float:
    """Joint PMF of per-PU collisions: product of binomials over C(F, Fs)."""
    _check_vector(Fs, pool, kv)
    log_p = -_log_comb(pool.F, Fs) + _log_comb(pool.Ff, kv.kf)
    for Fp_n, k_n in zip(pool.Fp, kv.k):
        log_p += _log_comb(Fp_n, k_n)
    return math.exp(log_p) if log_p > -math.inf else 0.0


def mvhypergeom_support(Fs: int, pool: SubcarrierPool):
    """Yield every feasible CollisionVector for one blind allocation."""
    if Fs > pool.F:
        raise ValueError(f"Fs={Fs} exceeds pool F={pool.F}")
    ranges = [hypergeom_support(Fs, Fp_n, pool.F) for Fp_n in pool.Fp]
    for combo in itertools.product(*ranges):
        kf = Fs - sum(combo)
        if 0 <= kf <= pool.Ff:
            yield CollisionVector(k=combo, kf=kf)


def mvhypergeom_mean(Fs: int, pool: SubcarrierPool) -> np.ndarray:
    """Per-PU expected collisions Fs * Fp_n / F (free count is Fs - sum)."""
    return np.array([Fs * Fp_n / pool.F for Fp_n in pool.Fp])


def mvhypergeom_sample(Fs: int, pool: SubcarrierPool, rng: np.random.Generator,
                       size: int | None = None):
    """Draw collision vectors by the sequential conditional-hypergeometric method.

    k_1 ~ HYPG(Fs, F_1^P, F), then k_2 ~ HYPG(Fs - k_1, F_2^P, F - F_1^P), and
    so on; the free count absorbs the remainder.  With ``size=None`` a single
    CollisionVector is returned, otherwise an integer array of shape
    (size, n_pu + 1) whose last column is the collision-free count.
    """
    if Fs > pool.F:
        raise ValueError(f"Fs={Fs} exceeds pool F={pool.F}")
    n = 1 if size is None else int(size)
    remaining_draw = np.full(n, Fs, dtype=np.int64)
    remaining_pool = pool.F
    cols = []
    for Fp_n in pool.Fp:
        if Fp_n == 0 or remaining_pool == 0:
            k_n = np.zeros(n, dtype=np.int64)
        else:
            k_n = rng.hypergeometric(Fp_n, remaining_pool - Fp_n, remaining_draw)
        cols.append(k_n)
        remaining_draw = remaining_draw - k_n
        remaining_pool -= Fp_n
    out = np.column_stack(cols + [remaining_draw]) if cols else remaining_draw[:, None]
    if size is None:
        row = out[0]
        return CollisionVector(k=tuple(int(v) for v in row[:-1]), kf=int(row[-1]))
    return out


# ---------------------------------------------------------------------------
# sequential orthogonal assignment (scheduler's collision law)
# ---------------------------------------------------------------------------

def sequential_mean(m: int, Fs_list, pool: SubcarrierPool) -> np.ndarray:
    """E[k_nm] for the m-th sequentially scheduled SU, per PU.

    Recursion: E[k_nm] = Fs_m (Fp_n - sum_{j<m} E[k_nj]) / (F - sum_{j<m} Fs_j).
    """
    Fs_list = list(Fs_list)
    if m < 1 or m > len(Fs_list):
        raise ValueError(f"step m={m} out of range")
    if sum(Fs_list[:m]) > pool.F:
        raise ValueError("cumulative SU demand exceeds the pool")
    used = np.zeros(pool.n_pu)
    remaining = float(pool.F)
    for j in range(m):
        mean_j = Fs_list[j] * (np.array(pool.Fp) - used) / remaining
        if j == m - 1:
            return mean_j
        used += mean_j
        remaining -= Fs_list[j]
    raise AssertionError("unreachable")


def _pool_states_after(m_minus_1: int, Fs_list, pool: SubcarrierPool,
                       budget: int) -> dict[tuple[int, ...], float] | None:
    """Distribution over depleted-pool states after the first m-1 assignments.

    A state is (remaining Fp_1, ..., remaining Fp_N, remaining free); the
    conditional law of the next collision vector depends on the past only
    through it.  Returns None when the state/transition count blows the budget.
    """
    states = {tuple(pool.Fp) + (pool.Ff,): 1.0}
    work = 0
    for j in range(m_minus_1):
        Fs_j = Fs_list[j]
        nxt: dict[tuple[int, ...], float] = {}
        for state, prob in states.items():
            sub = SubcarrierPool(F=sum(state), Fp=state[:-1])
            for kv in mvhypergeom_support(Fs_j, sub):
                work += 1
                if work > budget:
                    return None
                p = mvhypergeom_pmf(Fs_j, sub, kv)
                if p == 0.0:
                    continue
                new_state = tuple(
                    s - k for s, k in zip(state, kv.k + (kv.kf,))
                )
                nxt[new_state] = nxt.get(new_state, 0.0) + prob * p
        states = nxt
    return states


def sequential_pmf(m: int, Fs_list, pool: SubcarrierPool, kv: CollisionVector,
                   budget: int = ENUMERATION_BUDGET,
                   rng: np.random.Generator | None = None,
                   mc_draws: int = 200_000) -> float:
    """Marginal PMF of the m-th scheduled SU's collision vector.

    Exact by dynamic programming over depleted-pool states (the chain-rule
    product of conditional multivariate hypergeometric laws marginalized over
    all predecessors).  For m = 1 this reduces to ``mvhypergeom_pmf``.  If the
    enumeration exceeds ``budget`` the estimate falls back to Monte Carlo
    marginalization and an EnumerationBudgetWarning reports the standard error.
    """
    Fs_list = list(Fs_list)
    if m < 1 or m > len(Fs_list):
        raise ValueError(f"step m={m} out of range")
    if sum(Fs_list[:m]) > pool.F:
        raise ValueError("cumulative SU demand exceeds the pool")
    Fs_m = Fs_list[m - 1]
    if m == 1:
        return mvhypergeom_pmf(Fs_m, pool, kv)
    if len(kv.k) != pool.n_pu or kv.total != Fs_m:
        raise ValueError("collision vector inconsistent with step-m SU demand")
    states = _pool_states_after(m - 1, Fs_list, pool, budget)
    if states is not None:
        total = 0.0
        for state, prob in states.items():
            sub = SubcarrierPool(F=sum(state), Fp=state[:-1])
            feasible = (
                all(k <= s for k, s in zip(kv.k, state[:-1]))
                and kv.kf <= state[-1]
                and kv.total == Fs_m
            )
            if feasible:
                total += prob * mvhypergeom_pmf(Fs_m, sub, kv)
        return total
    if rng is None:
        rng = np.random.default_rng(0)
    hits = 0
    target = np.array(kv.k + (kv.kf,))
    for _ in range(mc_draws):
        state = list(pool.Fp) + [pool.Ff]
        draw = None
        for j in range(m):
            sub = SubcarrierPool(F=sum(state), Fp=tuple(state[:-1]))
            draw = mvhypergeom_sample(Fs_list[j], sub, rng)
            state = [s - k for s, k in zip(state, draw.k + (draw.kf,))]
        if np.array_equal(np.array(draw.k + (draw.kf,)), target):
            hits += 1
    p_hat = hits / mc_draws
    se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / mc_draws)
    warnings.warn(
        f"sequential_pmf exceeded the enumeration budget; Monte Carlo estimate "
        f"{p_hat:.6g} with standard error {se:.2g}",
        EnumerationBudgetWarning,
        stacklevel=2,
    )
    return p_hat


def sequential_support(m: int, Fs_list, pool: SubcarrierPool):
    """Feasible collision vectors of the m-th scheduled SU.

    The bound implied by feasibility of the conditional draws: k_nm cannot
    exceed min(Fs_m, Fp_n) and the vector must be reachable with nonnegative
    pool remainders for some predecessor history.
    """
    Fs_list = list(Fs_list)
    Fs_m = Fs_list[m - 1]
    prior = sum(Fs_list[: m - 1])
    for combo in itertools.product(
        *[range(0, min(Fs_m, Fp_n) + 1) for Fp_n in pool.Fp]
    ):
        kf = Fs_m - sum(combo)
        # the free pool can shrink by at most `prior` before step m
        if 0 <= kf <= pool.Ff and sum(combo) + kf + prior <= pool.F:
            yield CollisionVector(k=combo, kf=kf)
