"""Collision-law exactness against brute-force enumeration and samplers.

The enumeration oracles below use exact integer binomials (math.comb), fully
independent of the log-gamma evaluation inside the module.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from crshare import collision as col


def exact_hyper_pmf(Fs, Fp, F, k):
    if k < 0 or k > Fp or Fs - k < 0 or Fs - k > F - Fp:
        return 0.0
    return math.comb(Fp, k) * math.comb(F - Fp, Fs - k) / math.comb(F, Fs)


def exact_mv_pmf(Fs, Fp_list, F, kvec, kf):
    Ff = F - sum(Fp_list)
    if sum(kvec) + kf != Fs or kf < 0 or kf > Ff:
        return 0.0
    num = math.comb(Ff, kf)
    for Fp_n, k_n in zip(Fp_list, kvec):
        if k_n > Fp_n:
            return 0.0
        num *= math.comb(Fp_n, k_n)
    return num / math.comb(F, Fs)


class TestUnivariate:
    def test_worked_examples(self):
        assert col.hypergeom_pmf(3, 4, 10, 0) == pytest.approx(20 / 120, rel=1e-12)
        assert col.hypergeom_pmf(3, 4, 10, 3) == pytest.approx(4 / 120, rel=1e-12)
        assert col.hypergeom_pmf(3, 0, 10, 0) == 1.0

    def test_zero_off_support(self):
        assert col.hypergeom_pmf(3, 4, 10, 4) == 0.0
        assert col.hypergeom_pmf(8, 6, 10, 3) == 0.0  # below (Fs+Fp-F)^+ = 4

    def test_rejects_inconsistent_parameters(self):
        with pytest.raises(ValueError):
            col.hypergeom_pmf(11, 4, 10, 0)
        with pytest.raises(ValueError):
            col.hypergeom_mean(3, 12, 10)

    def test_mean_examples(self):
        assert col.hypergeom_mean(20, 30, 128) == pytest.approx(4.6875, abs=1e-12)
        assert col.hypergeom_mean(3, 0, 10) == 0.0
        assert col.hypergeom_mean(3, 4, 10) == pytest.approx(1.2, abs=1e-12)

    def test_mean_equals_enumerated_first_moment(self):
        for Fs, Fp, F in [(3, 4, 10), (20, 30, 128), (8, 6, 10), (5, 5, 5)]:
            enum = sum(k * exact_hyper_pmf(Fs, Fp, F, k)
                       for k in col.hypergeom_support(Fs, Fp, F))
            assert col.hypergeom_mean(Fs, Fp, F) == pytest.approx(enum, abs=1e-12)


class TestMultivariate:
    def test_worked_example(self):
        pool = col.SubcarrierPool(F=6, Fp=(2, 2))
        kv = col.CollisionVector(k=(1, 1), kf=0)
        assert col.mvhypergeom_pmf(2, pool, kv) == pytest.approx(4 / 15, rel=1e-12)

    def test_all_free(self):
        pool = col.SubcarrierPool(F=6, Fp=(0, 0))
        kv = col.CollisionVector(k=(0, 0), kf=2)
        assert col.mvhypergeom_pmf(2, pool, kv) == 1.0

    def test_normalization_small_case(self):
        pool = col.SubcarrierPool(F=9, Fp=(2, 3))
        total = sum(col.mvhypergeom_pmf(3, pool, kv)
                    for kv in col.mvhypergeom_support(3, pool))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_matches_exact_integer_oracle(self):
        pool = col.SubcarrierPool(F=12, Fp=(3, 4, 2))
        for kv in col.mvhypergeom_support(5, pool):
            want = exact_mv_pmf(5, pool.Fp, pool.F, kv.k, kv.kf)
            assert col.mvhypergeom_pmf(5, pool, kv) == pytest.approx(want, abs=1e-13)

    def test_rejects_inconsistent_vector(self):
        pool = col.SubcarrierPool(F=6, Fp=(2, 2))
        with pytest.raises(ValueError):
            col.mvhypergeom_pmf(2, pool, col.CollisionVector(k=(1,), kf=1))
        with pytest.raises(ValueError):
            col.mvhypergeom_pmf(2, pool, col.CollisionVector(k=(1, 1), kf=1))

    def test_per_component_means(self):
        pool = col.SubcarrierPool(F=12, Fp=(3, 4, 2))
        Fs = 5
        means = np.zeros(3)
        for kv in col.mvhypergeom_support(Fs, pool):
            means += np.array(kv.k) * col.mvhypergeom_pmf(Fs, pool, kv)
        np.testing.assert_allclose(means, col.mvhypergeom_mean(Fs, pool), atol=1e-12)


class TestSampler:
    def test_su_takes_everything(self):
        pool = col.SubcarrierPool(F=6, Fp=(2, 2))
        rng = np.random.default_rng(0)
        kv = col.mvhypergeom_sample(6, pool, rng)
        assert kv.k == (2, 2) and kv.kf == 2

    def test_empty_request(self):
        pool = col.SubcarrierPool(F=6, Fp=(2, 2))
        kv = col.mvhypergeom_sample(0, pool, np.random.default_rng(0))
        assert kv.k == (0, 0) and kv.kf == 0

    def test_frequency_of_worked_example(self):
        pool = col.SubcarrierPool(F=6, Fp=(2, 2))
        rng = np.random.default_rng(42)
        draws = col.mvhypergeom_sample(2, pool, rng, size=10**6)
        hits = np.all(draws == np.array([1, 1, 0]), axis=1).mean()
        p = 4 / 15
        sigma = math.sqrt(p * (1 - p) / 10**6)
        assert abs(hits - p) < 3 * sigma

    def test_chi_square_goodness_of_fit(self):
        pool = col.SubcarrierPool(F=10, Fp=(3, 2))
        Fs = 4
        rng = np.random.default_rng(7)
        draws = col.mvhypergeom_sample(Fs, pool, rng, size=10**6)
        stat = 0.0
        cells = 0
        for kv in col.mvhypergeom_support(Fs, pool):
            p = col.mvhypergeom_pmf(Fs, pool, kv)
            if p == 0.0:
                continue
            obs = np.all(draws == np.array(kv.k + (kv.kf,)), axis=1).sum()
            stat += (obs - p * 10**6) ** 2 / (p * 10**6)
            cells += 1
        pvalue = chi2.sf(stat, cells - 1)
        assert pvalue > 0.001

    @settings(max_examples=40, deadline=None)
    @given(data=st.data())
    def test_sampled_vectors_respect_support_bounds(self, data):
        F = data.draw(st.integers(min_value=2, max_value=30))
        n_pu = data.draw(st.integers(min_value=1, max_value=3))
        splits = sorted(data.draw(
            st.lists(st.integers(0, F), min_size=n_pu, max_size=n_pu)))
        Fp = []
        left = F
        for s in splits:
            take = min(s, left)
            Fp.append(take)
            left -= take
        pool = col.SubcarrierPool(F=F, Fp=tuple(Fp))
        Fs = data.draw(st.integers(min_value=0, max_value=F))
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        draws = col.mvhypergeom_sample(Fs, pool, rng, size=200)
        assert (draws.sum(axis=1) == Fs).all()
        for n, Fp_n in enumerate(pool.Fp):
            lo = max(0, Fs + Fp_n - F)
            hi = min(Fs, Fp_n)
            assert (draws[:, n] >= lo).all() and (draws[:, n] <= hi).all()
        assert (draws[:, -1] <= pool.Ff).all()


class TestSequential:
    def test_first_step_reduces_to_mvhypergeom(self):
        pool = col.SubcarrierPool(F=9, Fp=(2, 3))
        for kv in col.mvhypergeom_support(3, pool):
            assert col.sequential_pmf(1, [3, 2], pool, kv) == pytest.approx(
                col.mvhypergeom_pmf(3, pool, kv), abs=1e-15)

    def test_second_step_matches_brute_force_joint(self):
        # enumerate the full two-step joint law by hand and marginalize
        pool = col.SubcarrierPool(F=6, Fp=(2,))
        Fs = [2, 2]
        marg = {}
        for k1 in range(3):
            kf1 = Fs[0] - k1
            p1 = exact_mv_pmf(Fs[0], [2], 6, [k1], kf1)
            if p1 == 0:
                continue
            for k2 in range(3):
                kf2 = Fs[1] - k2
                p2 = exact_mv_pmf(Fs[1], [2 - k1], 6 - Fs[0], [k2], kf2)
                if p2 == 0:
                    continue
                marg[(k2, kf2)] = marg.get((k2, kf2), 0.0) + p1 * p2
        for (k2, kf2), want in marg.items():
            kv = col.CollisionVector(k=(k2,), kf=kf2)
            assert col.sequential_pmf(2, Fs, pool, kv) == pytest.approx(want, abs=1e-12)

    def test_second_step_normalization(self):
        pool = col.SubcarrierPool(F=6, Fp=(2,))
        total = sum(
            col.sequential_pmf(2, [2, 2], pool, kv)
            for kv in col.sequential_support(2, [2, 2], pool)
        )
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_mean_recursion_base_case(self):
        pool = col.SubcarrierPool(F=10, Fp=(4,))
        assert col.sequential_mean(1, [3], pool)[0] == pytest.approx(1.2, abs=1e-14)

    def test_mean_recursion_second_step(self):
        pool = col.SubcarrierPool(F=6, Fp=(2,))
        assert col.sequential_mean(2, [2, 2], pool)[0] == pytest.approx(2 / 3, abs=1e-14)

    def test_mean_matches_pmf_enumeration(self):
        pool = col.SubcarrierPool(F=8, Fp=(3,))
        Fs = [2, 3, 2]
        m = 3
        mean = sum(
            kv.k[0] * col.sequential_pmf(m, Fs, pool, kv)
            for kv in col.sequential_support(m, Fs, pool)
        )
        assert col.sequential_mean(m, Fs, pool)[0] == pytest.approx(mean, abs=1e-12)

    def test_total_collisions_exhaust_pu_block(self):
        # four SUs requesting the whole pool: every PU subcarrier collides once
        pool = col.SubcarrierPool(F=8, Fp=(3,))
        Fs = [2, 2, 2, 2]
        total = sum(col.sequential_mean(m, Fs, pool)[0] for m in range(1, 5))
        assert total == pytest.approx(3.0, abs=1e-12)

    def test_budget_fallback_warns_with_standard_error(self):
        pool = col.SubcarrierPool(F=14, Fp=(5, 4))
        Fs = [3, 3, 3]
        kv = col.CollisionVector(k=(1, 1), kf=1)
        exact = col.sequential_pmf(3, Fs, pool, kv)
        rng = np.random.default_rng(3)
        with pytest.warns(col.EnumerationBudgetWarning):
            approx = col.sequential_pmf(3, Fs, pool, kv, budget=10,
                                        rng=rng, mc_draws=20_000)
        assert abs(approx - exact) < 0.02

    def test_demand_beyond_pool_rejected(self):
        pool = col.SubcarrierPool(F=6, Fp=(2,))
        with pytest.raises(ValueError):
            col.sequential_pmf(3, [3, 3, 3], pool,
                               col.CollisionVector(k=(0,), kf=3))


class TestPoolInvariants:
    def test_pool_validation(self):
        with pytest.raises(ValueError):
            col.SubcarrierPool(F=5, Fp=(3, 3))
        with pytest.raises(ValueError):
            col.SubcarrierPool(F=0, Fp=())
        with pytest.raises(ValueError):
            col.SubcarrierPool(F=5, Fp=(-1,))

    def test_free_count(self):
        assert col.SubcarrierPool(F=10, Fp=(2, 3)).Ff == 5

    def test_degenerate_pu_block_collapses(self):
        pool = col.SubcarrierPool(F=6, Fp=(0, 2))
        total = 0.0
        for kv in col.mvhypergeom_support(3, pool):
            p = col.mvhypergeom_pmf(3, pool, kv)
            if kv.k[0] > 0:
                assert p == 0.0
            total += p
        assert total == pytest.approx(1.0, abs=1e-12)
