"""Average-capacity combinatorics, bounds, scaling and convergence laws."""

import itertools
import math

import numpy as np
import pytest

from crshare import capmoments as cm
from crshare import collision as col
from crshare import meancap
from crshare.fading import LinkParams
from crshare.mcsim import capacity_samples
from crshare.meancap import SystemConfig, make_config

FIG4_CFG = make_config(F=128, Fs=20, Fp=30, Pm=100.0, Pn=10.0, psi=1.0, eta=1.0)


class TestSystemConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            make_config(F=10, Fs=11, Fp=3, Pm=1.0, Pn=1.0, psi=1.0, eta=1.0)
        with pytest.raises(ValueError):
            SystemConfig(pool=col.SubcarrierPool(F=10, Fp=(3,)), Fs=2, links=())
        with pytest.raises(ValueError):
            SystemConfig(
                pool=col.SubcarrierPool(F=10, Fp=(3, 3)),
                Fs=2,
                links=(
                    LinkParams(Pm=1.0, Pn=1.0, psi=1.0, eta=1.0),
                    LinkParams(Pm=2.0, Pn=1.0, psi=1.0, eta=1.0),
                ),
            )


class TestSinglePuAverage:
    def test_stubbed_moment_oracle(self):
        # E[k] * mean_i + E[kf] * mean_ni = 1.2 * 1 + 1.8 * 2 = 4.8
        got = meancap.avg_capacity_single_pu_from_moments(10, 3, 4, 1.0, 2.0)
        assert got == pytest.approx(4.8, abs=1e-12)

    def test_no_pu_block(self):
        got = meancap.avg_capacity_single_pu_from_moments(10, 3, 0, 1.0, 2.0)
        assert got == pytest.approx(3 * 2.0, abs=1e-12)

    def test_iterated_expectation_identity(self):
        # formula equals E[k] mean_i + E[kf] mean_ni with hypergeometric means
        for F, Fs, Fp in [(10, 3, 4), (128, 20, 30), (12, 8, 6)]:
            mi, mni = 0.7, 1.9
            want = (col.hypergeom_mean(Fs, Fp, F) * mi
                    + col.hypergeom_mean(Fs, F - Fp, F) * mni)
            got = meancap.avg_capacity_single_pu_from_moments(F, Fs, Fp, mi, mni)
            assert got == pytest.approx(want, abs=1e-12)

    def test_full_monte_carlo_at_fig4_parameters(self):
        rng = np.random.default_rng(61)
        n = 200_000
        c = capacity_samples(FIG4_CFG, rng, n)
        se = c.std() / math.sqrt(n)
        assert abs(meancap.avg_capacity_single_pu(FIG4_CFG) - c.mean()) < 3 * se


class TestMultiPuAverage:
    def test_single_pu_reduction(self):
        got = meancap.avg_capacity_multi_pu(FIG4_CFG)
        want = meancap.avg_capacity_single_pu(FIG4_CFG)
        assert got == pytest.approx(want, abs=1e-12)

    def test_saturated_pool_limit(self):
        # equal-power PUs covering the whole pool: Fs * mean_i
        got = meancap.avg_capacity_multi_pu_from_moments(
            12, 5, (4, 4, 4), (0.7, 0.7, 0.7), 1.9)
        assert got == pytest.approx(5 * 0.7, abs=1e-12)

    def test_permutation_invariance(self):
        Fp = (3, 7, 2)
        means = (0.5, 0.9, 0.7)
        base = meancap.avg_capacity_multi_pu_from_moments(20, 6, Fp, means, 1.5)
        for perm in itertools.permutations(range(3)):
            got = meancap.avg_capacity_multi_pu_from_moments(
                20, 6, tuple(Fp[i] for i in perm),
                tuple(means[i] for i in perm), 1.5)
            assert got == pytest.approx(base, abs=1e-12)

    def test_monotone_decreasing_in_pu_count(self):
        # Fig. 6 caption parameters: Fs=20, F=128, Fp_n=10, Pn=5 dB, psi=-5 dB
        vals = []
        for n_pu in (2, 6, 12):
            cfg = make_config(
                F=128, Fs=20, Fp=(10,) * n_pu, Pm=10.0,
                Pn=10 ** 0.5, psi=10 ** -0.5, eta=1.0)
            vals.append(meancap.avg_capacity_multi_pu(cfg))
        assert vals[0] > vals[1] > vals[2]

    def test_multi_pu_monte_carlo(self):
        cfg = make_config(F=24, Fs=6, Fp=(5, 4), Pm=31.6, Pn=(3.16, 10.0),
                          psi=1.0, eta=1.0)
        rng = np.random.default_rng(67)
        n = 200_000
        c = capacity_samples(cfg, rng, n)
        se = c.std() / math.sqrt(n)
        assert abs(meancap.avg_capacity_multi_pu(cfg) - c.mean()) < 3 * se


class TestBounds:
    def test_orderings_always_hold(self):
        rng = np.random.default_rng(73)
        for _ in range(200):
            F = rng.integers(2, 40)
            Fs = rng.integers(1, F + 1)
            Fp = rng.integers(0, F + 1)
            mean_ni = rng.uniform(0.5, 3.0)
            mean_i = mean_ni * rng.uniform(0.05, 1.0)
            naive_lo, naive_hi, tight_lo, tight_hi = \
                meancap.capacity_bounds_from_moments(F, Fs, Fp, mean_i, mean_ni)
            avg = meancap.avg_capacity_single_pu_from_moments(F, Fs, Fp, mean_i, mean_ni)
            eps = 1e-12
            assert naive_lo - eps <= tight_lo <= avg + eps
            assert avg <= tight_hi + eps <= naive_hi + 2 * eps

    def test_wide_pool_equality_case(self):
        # Fs + Fp <= F and Fs <= Fp: support spans [0, Fs], so tight == naive
        naive_lo, naive_hi, tight_lo, tight_hi = \
            meancap.capacity_bounds_from_moments(10, 3, 4, 1.0, 2.0)
        assert tight_lo == pytest.approx(naive_lo) == pytest.approx(3.0)
        assert tight_hi == pytest.approx(naive_hi) == pytest.approx(6.0)

    def test_constrained_support_example(self):
        # Fs=8, Fp=6, F=10: k in [4, 6]
        naive_lo, naive_hi, tight_lo, tight_hi = \
            meancap.capacity_bounds_from_moments(10, 8, 6, 1.0, 2.0)
        assert tight_lo == pytest.approx(6 * 1.0 + 2 * 2.0)   # 10
        assert tight_hi == pytest.approx(4 * 1.0 + 4 * 2.0)   # 12
        # enumeration oracle: E[C] over the k-support stays inside
        for k in range(4, 7):
            assert tight_lo <= k * 1.0 + (8 - k) * 2.0 <= tight_hi

    def test_multi_pu_bounds_bracket_average(self):
        cfg = make_config(F=128, Fs=20, Fp=(10,) * 6, Pm=10.0, Pn=10 ** 0.5,
                          psi=10 ** -0.5, eta=1.0)
        lo, hi = meancap.capacity_bounds_multi_pu(cfg)
        avg = meancap.avg_capacity_multi_pu(cfg)
        assert lo <= avg <= hi


class TestScalingAndConvergence:
    def test_linear_in_fs(self):
        a1 = meancap.avg_capacity_single_pu_from_moments(128, 10, 30, 0.6, 1.4)
        a2 = meancap.avg_capacity_single_pu_from_moments(128, 20, 30, 0.6, 1.4)
        assert a2 == pytest.approx(2 * a1, rel=1e-12)

    def test_affine_decreasing_in_fp(self):
        vals = [meancap.avg_capacity_single_pu_from_moments(128, 20, fp, 0.6, 1.4)
                for fp in (10, 20, 30, 40)]
        diffs = np.diff(vals)
        assert (diffs < 0).all()
        assert np.allclose(diffs, diffs[0], atol=1e-12)  # affine

    def test_inverse_f_gap_slope(self):
        mean_i, mean_ni = 0.6, 1.4
        Fs, Fp = 20, 30
        limit = Fs * mean_ni
        F_grid = np.logspace(3, 5, 9)
        gaps = [abs(meancap.avg_capacity_single_pu_from_moments(F, Fs, Fp, mean_i, mean_ni)
                    - limit) for F in F_grid]
        slope = np.polyfit(np.log(F_grid), np.log(gaps), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.01)

    def test_limit_value_at_large_f(self):
        means_i, mean_ni = meancap.subcarrier_means(FIG4_CFG)
        cfg = make_config(F=3000, Fs=20, Fp=30, Pm=100.0, Pn=10.0, psi=1.0, eta=1.0)
        limit = 20 * mean_ni
        assert meancap.avg_capacity_single_pu(cfg) == pytest.approx(limit, rel=0.01)

    def test_convergence_ratios(self):
        rows = meancap.convergence_diagnostic(FIG4_CFG, 0, F_grid=(100, 1000, 10**4))
        for F, avg, r_delta, r_gap in rows:
            assert 0.0 < r_delta <= 1.0 and 0.0 < r_gap <= 1.0
        F, avg, r_delta, r_gap = rows[-1]
        assert 0.95 <= r_delta <= 1.0
        assert 0.95 <= r_gap <= 1.0
        # closed-form ratio oracles for the 1/F law: F/(F+2) and F/(F+1);
        # the delta ratio divides two O(1/F^2) differences, so float
        # cancellation limits it to ~1e-8
        assert r_delta == pytest.approx(F / (F + 2), rel=1e-7)
        assert r_gap == pytest.approx(F / (F + 1), rel=1e-9)

    def test_grid_point_must_fit_blocks(self):
        with pytest.raises(ValueError):
            meancap.convergence_diagnostic(FIG4_CFG, 0, F_grid=(30,))


class TestMomentMemoization:
    def test_sweep_reuses_moment_evaluations(self):
        cm.capacity_moments_interference.cache_clear()
        lp = FIG4_CFG.links[0]
        for F in (128, 256, 512, 1024):
            cfg = make_config(F=F, Fs=20, Fp=30, Pm=lp.Pm, Pn=lp.Pn,
                              psi=lp.psi, eta=lp.eta)
            meancap.avg_capacity_single_pu(cfg)
        info = cm.capacity_moments_interference.cache_info()
        assert info.misses == 1 and info.hits == 3
