"""Incomplete-gamma primitives and the semi-infinite Chebyshev rule.

Derived expectations were computed with independent oracles and frozen here:
adaptive quadrature (scipy.integrate.quad) for the unregularized integrals and
30-digit mpmath evaluations for the regularized ones.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crshare import specfun as sf

# oracle values (mpmath, 30 digits; quad cross-checked)
GAMMA_0_001 = 4.037929576538114      # E1(0.01)
GAMMA_25_13 = 1.0121136007032034     # Gamma(2.5, 1.3)
P_27_31 = 0.6680008299471278         # P(2.7, 3.1)


class TestUpperIncompleteGamma:
    def test_shape_one_is_exponential(self):
        assert sf.upper_incomplete_gamma(1.0, 2.0) == pytest.approx(math.exp(-2), rel=1e-14)

    def test_exponential_integral_case(self):
        assert sf.upper_incomplete_gamma(0.0, 0.01) == pytest.approx(GAMMA_0_001, rel=1e-12)

    def test_generic_order_vs_quadrature_oracle(self):
        assert sf.upper_incomplete_gamma(2.5, 1.3) == pytest.approx(GAMMA_25_13, abs=1e-10)

    def test_quadrature_oracle_live(self):
        # recompute one point with the brute-force oracle to guard the frozen values
        from scipy.integrate import quad
        val, _ = quad(lambda t: t**1.5 * math.exp(-t), 1.3, np.inf)
        assert val == pytest.approx(GAMMA_25_13, abs=1e-10)

    def test_domain_error_for_e1_at_nonpositive_x(self):
        with pytest.raises(ValueError):
            sf.upper_incomplete_gamma(0.0, 0.0)
        with pytest.raises(ValueError):
            sf.upper_incomplete_gamma(0.0, -1.0)

    def test_overflow_saturates_with_warning(self):
        with pytest.warns(RuntimeWarning):
            out = sf.upper_incomplete_gamma(200.0, 1.0)
        assert out == math.inf

    def test_vectorized_matches_scalar(self):
        xs = np.array([0.3, 1.0, 2.5, 40.0])
        vec = sf.upper_incomplete_gamma(1.7, xs)
        scal = [sf.upper_incomplete_gamma(1.7, float(x)) for x in xs]
        np.testing.assert_allclose(vec, scal, rtol=1e-14)


class TestRegularizedGammaP:
    def test_shape_one_closed_form(self):
        assert sf.regularized_gamma_p(1.0, math.log(2)) == pytest.approx(0.5, abs=1e-14)

    def test_lower_limit(self):
        assert sf.regularized_gamma_p(3.0, 0.0) == 0.0

    def test_against_independent_series_oracle(self):
        assert sf.regularized_gamma_p(2.7, 3.1) == pytest.approx(P_27_31, abs=1e-12)

    def test_complement_identity_on_log_grid(self):
        for a in (0.4, 1.0, 3.7, 25.0, 140.0):
            x = np.logspace(-6, 3, 40)
            p = sf.regularized_gamma_p(a, x)
            q = sf.upper_incomplete_gamma(a, x) / math.gamma(a)
            np.testing.assert_allclose(p + q, 1.0, atol=1e-12)

    def test_monotone_in_x(self):
        x = np.linspace(0.0, 50.0, 400)
        p = sf.regularized_gamma_p(2.3, x)
        assert (np.diff(p) >= 0).all()
        assert p[0] == 0.0 and p[-1] > 1 - 1e-12

    def test_complement_keeps_tail_precision(self):
        # Q(3, 50) ~ 1.4e-19 underflows through 1 - P; the direct complement
        # must hold full relative accuracy (oracle: mpmath 30 digits)
        assert sf.regularized_gamma_q(3.0, 50.0) == pytest.approx(
            2.509303552201057e-19, rel=1e-12)
        assert sf.regularized_gamma_q(1.0, 0.3) == pytest.approx(
            math.exp(-0.3), rel=1e-14)


class TestInverseRegularizedGammaP:
    def test_exponential_quantiles(self):
        assert sf.inverse_regularized_gamma_p(1.0, 0.9) == pytest.approx(
            -math.log(0.1), rel=1e-10)
        assert sf.inverse_regularized_gamma_p(1.0, 0.5) == pytest.approx(
            math.log(2), rel=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(
        a=st.floats(min_value=0.1, max_value=80.0),
        x0=st.floats(min_value=1e-3, max_value=200.0),
    )
    def test_round_trip_identity(self, a, x0):
        q = sf.regularized_gamma_p(a, x0)
        if not 1e-12 < q < 1 - 1e-12:
            return  # quantile out of invertible float range
        # conditioning guard: a float64 quantile only pins x to ~eps / (x f(x))
        density = math.exp((a - 1) * math.log(x0) - x0 - math.lgamma(a))
        if x0 * density < 5e-8:
            return
        x = sf.inverse_regularized_gamma_p(a, q)
        assert x == pytest.approx(x0, rel=1e-8)

    def test_rejects_bad_quantiles(self):
        for q in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                sf.inverse_regularized_gamma_p(1.0, q)

    def test_small_q_diagnostic_matches_in_its_regime(self):
        a, q = 3.0, 1e-9
        approx = sf.inverse_regularized_gamma_p_small_q(a, q)
        exact = sf.inverse_regularized_gamma_p(a, q)
        assert approx == pytest.approx(exact, rel=1e-3)


class TestGcqRule:
    def test_order_fifty_contract(self):
        rule = sf.gcq_rule(50)
        err = abs(rule.integrate(lambda s: np.exp(-s)) - 1.0)
        assert err < 1e-6
        err2 = abs(float(np.sum(rule.weights * rule.nodes * np.exp(-rule.nodes))) - 1.0)
        assert err2 < 1e-5

    def test_rule_invariants(self):
        rule = sf.gcq_rule(50)
        assert rule.order == 50
        assert len(rule.nodes) == len(rule.weights) == 50
        assert (rule.nodes > 0).all() and (np.diff(rule.nodes) > 0).all()
        assert (rule.weights > 0).all()

    def test_degenerate_order_one(self):
        rule = sf.gcq_rule(1)
        assert np.isfinite(rule.nodes).all() and np.isfinite(rule.weights).all()

    def test_doubling_never_hurts_on_benchmark(self):
        errs = []
        for order in (25, 50, 100, 200):
            rule = sf.gcq_rule(order)
            errs.append(abs(float(np.sum(rule.weights * np.exp(-rule.nodes))) - 1.0))
        assert all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))

    def test_log_integrand_used_by_second_moments(self):
        # oracle: mpmath.quad of 2 log(1+s)/(1+s) e^-s over (0, inf)
        rule = sf.gcq_rule(50)
        val = float(np.sum(
            rule.weights * 2 * np.log1p(rule.nodes) / (1 + rule.nodes)
            * np.exp(-rule.nodes)
        ))
        assert val == pytest.approx(0.5319307700648184, rel=1e-8)
