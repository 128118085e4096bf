"""Gumbel-domain normalizers, growth function, and convergence of maxima."""

import math

import numpy as np
import pytest

from crshare import extremes, moschopoulos as mos
from crshare.specfun import EULER_GAMMA

UNIT_EXP = mos.build_series([(1.0, 1.0)], h=5)


def exp_cdf(x):
    return -math.expm1(-x)


def exp_pdf(x):
    return math.exp(-x)


class TestGumbelParams:
    def test_unit_exponential_closed_form(self):
        gp = extremes.gumbel_params(exp_cdf, exp_pdf, 100)
        assert gp.bM == pytest.approx(math.log(100), abs=1e-10)
        assert gp.aM == pytest.approx(1.0, rel=1e-8)

    def test_round_trip_quantile(self):
        for M in (2, 10, 1000):
            gp = extremes.gumbel_params(exp_cdf, exp_pdf, M)
            assert exp_cdf(gp.bM) == pytest.approx(1 - 1 / M, abs=1e-10)

    def test_m_two_hits_median(self):
        gp = extremes.gumbel_params(exp_cdf, exp_pdf, 2)
        assert exp_cdf(gp.bM) == pytest.approx(0.5, abs=1e-10)

    def test_series_wrapper(self):
        gp = extremes.gumbel_params_series(UNIT_EXP, 100)
        assert gp.bM == pytest.approx(math.log(100), abs=1e-8)
        assert gp.aM == pytest.approx(1.0, rel=1e-6)

    def test_rejects_tiny_m(self):
        with pytest.raises(ValueError):
            extremes.gumbel_params(exp_cdf, exp_pdf, 1)

    def test_flat_cdf_reported(self):
        with pytest.raises(ArithmeticError):
            extremes.gumbel_params(lambda x: 0.0, exp_pdf, 10)


class TestAsymptoticMax:
    def test_unit_exponential_value(self):
        gp = extremes.gumbel_params(exp_cdf, exp_pdf, 100)
        got = extremes.asymptotic_max_capacity(gp)
        assert got == pytest.approx(math.log(100) + EULER_GAMMA, abs=1e-8)
        # harmonic-number oracle: E[max of M exponentials] = H_M
        h100 = sum(1 / i for i in range(1, 101))
        assert abs(got - h100) < 1 / (2 * 100) + 1e-6

    def test_degenerate_scale(self):
        gp = extremes.GumbelParams(bM=3.0, aM=1e-300, M=10)
        assert extremes.asymptotic_max_capacity(gp) == pytest.approx(3.0)

    def test_monotone_in_m(self):
        s = mos.build_series([(2.0, 0.7), (3.0, 1.1)], h=50)
        vals = [extremes.asymptotic_max_capacity(extremes.gumbel_params_series(s, M))
                for M in (10, 30, 100, 300)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_location_scale_equivariance(self):
        shift = 2.5
        gp = extremes.gumbel_params(exp_cdf, exp_pdf, 50)
        gp_shifted = extremes.gumbel_params(
            lambda x: exp_cdf(x - shift), lambda x: exp_pdf(x - shift), 50,
            x_hint=shift + 1)
        assert gp_shifted.bM == pytest.approx(gp.bM + shift, abs=1e-8)
        assert gp_shifted.aM == pytest.approx(gp.aM, rel=1e-6)

    def test_monte_carlo_capacity_law(self):
        # sum-of-Gamma capacity law, 10 subcarriers worth of fitted parts
        kv_components = [(4 * 0.9, 0.5), (6 * 1.8, 0.35)]
        s = mos.build_series(kv_components, h=60)
        M, reps = 200, 10**5
        rng = np.random.default_rng(107)
        maxima = mos.sample(s, rng, (reps, M)).max(axis=1)
        asym = extremes.asymptotic_max_capacity(extremes.gumbel_params_series(s, M))
        assert abs(asym - maxima.mean()) / maxima.mean() < 0.03


class TestVonMisesCheck:
    def test_single_exponential_growth_is_constant(self):
        beta = 1.7
        s = mos.build_series([(1.0, beta)], h=5)
        rows = extremes.von_mises_check(s, np.linspace(1, 20, 8))
        for x, g, valid in rows:
            assert valid
            assert g == pytest.approx(beta, rel=1e-9)

    def test_gamma_shape_three_tail(self):
        s = mos.build_series([(3.0, 2.0)], h=5)
        rows = extremes.von_mises_check(s, np.linspace(40, 120, 5))
        assert rows[-1][2]
        assert rows[-1][1] == pytest.approx(2.0, rel=0.05)

    def test_equal_scale_sum_tail(self):
        s = mos.build_series([(1.0, 0.8), (2.5, 0.8)], h=5)
        rows = extremes.von_mises_check(s, np.linspace(30, 90, 4))
        assert rows[-1][1] == pytest.approx(0.8, rel=0.05)

    def test_mixed_scales_follow_the_largest_scale_oracle(self):
        # Exp(1)+Exp(2): exact growth (2e^{-x/2} - e^{-x}) / (e^{-x/2} - e^{-x})
        # tends to beta_max = 2.  The truncated-series values must track the
        # closed form wherever the truncation bound still certifies them.
        s = mos.auto_truncation([(1.0, 1.0), (1.0, 2.0)], y_max=40.0, tol=1e-10)
        rows = extremes.von_mises_check(s, np.linspace(10, 25, 6))
        for x, g, valid in rows:
            oracle = ((2 * math.exp(-x / 2) - math.exp(-x))
                      / (math.exp(-x / 2) - math.exp(-x)))
            if valid:
                assert g == pytest.approx(oracle, rel=1e-3)
        assert any(valid for _, _, valid in rows)

    def test_invalid_points_flagged_in_deep_tail(self):
        s = mos.build_series([(1.0, 1.0), (1.0, 2.0)], h=8)
        rows = extremes.von_mises_check(s, np.array([60.0, 90.0]))
        assert not any(valid for _, _, valid in rows)


class TestGumbelDistance:
    def test_unit_exponential_convergence(self):
        rng = np.random.default_rng(113)
        ks = {M: extremes.gumbel_cdf_distance(UNIT_EXP, M, 10**5, rng)
              for M in (10, 100, 1000)}
        assert ks[1000] < 0.02
        assert ks[10] > ks[100] > ks[1000]

    def test_capacity_law_distance(self):
        s = mos.build_series([(4 * 0.9, 0.5), (6 * 1.8, 0.35)], h=60)
        rng = np.random.default_rng(117)
        assert extremes.gumbel_cdf_distance(s, 500, 2 * 10**4, rng) < 0.05


class TestTermwiseDiagnostic:
    def test_not_an_inverse_in_general(self):
        # scale below the quantile: argument leaves (0,1) -> NaN, flagged
        s = mos.build_series([(1.0, 0.5), (1.0, 0.6)], h=30)
        val = extremes.termwise_position_parameter(s, 100)
        assert math.isnan(val)

    def test_evaluable_branch_disagrees_with_true_inverse(self):
        s = mos.build_series([(2.0, 2.0), (1.0, 3.0)], h=60)
        term = extremes.termwise_position_parameter(s, 50)
        true_b = extremes.gumbel_params_series(s, 50).bM
        assert math.isfinite(term)
        # the printed expression commutes inversion and summation; it lands
        # away from the genuine quantile
        assert abs(term - true_b) / true_b > 0.01
