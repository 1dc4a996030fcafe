"""Estimator identities, exhaustive binomial oracles, variance formulas."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmcert.errors import ValidationError
from rmcert.estimation import (
    SettingStats,
    bernstein_single_setting_cap,
    correlation_sample,
    e_hat_t,
    moment_estimate,
    p_hat_k,
    stats_from_outcomes,
    variance_coefficients,
    variance_r2_estimator,
    variance_upper_bound,
)
from rmcert.bounds import WCLASS, ksep, ksep_bound_r2, ksep_bound_r4, mprod_bound_r2, mproducible
from rmcert.moments import ghz_moment_closed

from conftest import (
    binomial_expectation_poly,
    e_in_p_poly,
    ghz_correlations,
    poly_add,
    poly_pow,
    poly_scale,
    poly_trim,
    simulate_r2_estimates,
    uniform_directions,
)


def exact_p_hat(K, y, k):
    num = 1
    den = 1
    for j in range(k):
        num *= y - j
        den *= K - j
    return Fraction(num, den)


def exact_e_hat(K, y, t):
    total = Fraction(0)
    for k in range(t + 1):
        total += Fraction((-2) ** k * math.comb(t, k)) * exact_p_hat(K, y, k)
    return (-1) ** t * total


class TestCorrelationSample:
    def test_all_plus(self):
        assert correlation_sample((1, 1, 1)) == 1

    def test_even_minus_count(self):
        assert correlation_sample((-1, -1, 1)) == 1

    def test_subset(self):
        assert correlation_sample((-1, 1, -1), subset=[0, 1]) == -1

    def test_bad_subset(self):
        with pytest.raises(ValidationError):
            correlation_sample((1, 1), subset=[0, 0])
        with pytest.raises(ValidationError):
            correlation_sample((1, 1), subset=[2])

    def test_bad_outcomes(self):
        with pytest.raises(ValidationError):
            correlation_sample((1, 0, -1))


class TestPHat:
    @pytest.mark.parametrize("K,y,k,expected", [
        (5, 5, 2, Fraction(1)),
        (4, 1, 2, Fraction(0)),
        (3, 2, 2, Fraction(1, 3)),
    ])
    def test_values(self, K, y, k, expected):
        assert p_hat_k(SettingStats(K, y), k) == pytest.approx(float(expected), abs=1e-15)

    def test_insufficient_shots(self):
        with pytest.raises(ValidationError, match="insufficient"):
            p_hat_k(SettingStats(2, 1), 3)

    def test_unbiased_exhaustive(self):
        # E_binomial[P~_k] == P^k as an exact polynomial identity, K <= 6
        for K in range(1, 7):
            for k in range(1, K + 1):
                values = [exact_p_hat(K, y, k) for y in range(K + 1)]
                got = binomial_expectation_poly(K, values)
                expected = [Fraction(0)] * k + [Fraction(1)]
                assert poly_trim(got) == expected, (K, k)


class TestEHat:
    @pytest.mark.parametrize("K,y,t,expected", [
        (2, 2, 2, 1.0),
        (2, 1, 2, -1.0),
        (3, 0, 2, 1.0),
    ])
    def test_values(self, K, y, t, expected):
        assert e_hat_t(SettingStats(K, y), t) == pytest.approx(expected, abs=1e-14)

    def test_unbiased_for_e_powers(self):
        # E_binomial[E~_t] == (2P-1)^t exactly, K <= 6
        for K in range(2, 7):
            for t in range(1, K + 1):
                values = [exact_e_hat(K, y, t) for y in range(K + 1)]
                got = binomial_expectation_poly(K, values)
                assert got == poly_trim(poly_pow(e_in_p_poly(), t)), (K, t)

    @given(st.integers(2, 100), st.data())
    @settings(max_examples=60, deadline=None)
    def test_range(self, K, data):
        y = data.draw(st.integers(0, K))
        v = e_hat_t(SettingStats(K, y), 2)
        assert -1.0 / (K - 1) - 1e-12 <= v <= 1.0 + 1e-12

    def test_range_exhaustive(self):
        for K in range(2, 101):
            vals = [e_hat_t(SettingStats(K, y), 2) for y in range(K + 1)]
            assert min(vals) >= -1.0 / (K - 1) - 1e-12
            assert max(vals) <= 1.0 + 1e-12


class TestVarianceCoefficients:
    def test_k2(self):
        assert variance_coefficients(2) == (0, 0, 1)

    def test_k3_settles_the_closed_form(self):
        # the enumeration below independently confirms these numbers
        assert variance_coefficients(3) == (0, Fraction(2, 3), Fraction(1, 3))

    def test_k10(self):
        A, _, _ = variance_coefficients(10)
        assert A == Fraction(28, 45)

    def test_identity_exhaustive(self):
        # E_binomial[E~_2^2] == A E^4 + B E^2 + C exactly, K = 2..10
        for K in range(2, 11):
            values = [exact_e_hat(K, y, 2) ** 2 for y in range(K + 1)]
            got = binomial_expectation_poly(K, values)
            A, B, C = variance_coefficients(K)
            e2 = poly_pow(e_in_p_poly(), 2)
            e4 = poly_pow(e_in_p_poly(), 4)
            expected = poly_trim(
                poly_add(poly_add(poly_scale(e4, A), poly_scale(e2, B)), [C])
            )
            assert got == expected, K

    def test_bernstein_cap(self):
        # max_P Var_binomial(E~_2) <= 2(K-1)/(K(2K-3)), K = 2..50
        for K in range(2, 51):
            A, B, C = variance_coefficients(K)
            e = np.linspace(-1.0, 1.0, 100001)
            var = (float(A) - 1.0) * e ** 4 + float(B) * e ** 2 + float(C)
            assert var.max() <= bernstein_single_setting_cap(K) + 1e-12

    def test_k_too_small(self):
        with pytest.raises(ValidationError):
            variance_coefficients(1)


class TestVarianceOfEstimator:
    def test_pure_shot_noise(self):
        A, B, C = variance_coefficients(7)
        assert variance_r2_estimator(0.0, 0.0, 10, 7) == pytest.approx(float(C) / 10)

    def test_k2_any_state(self):
        r2 = 0.3
        assert variance_r2_estimator(r2, 0.9, 5, 2) == pytest.approx((1 - r2 ** 2) / 5)

    def test_against_monte_carlo_ghz5(self, rng):
        # end-to-end variance of R~^(2) on GHZ_5 vs the formula, 5% rel
        n, M, K, reps = 5, 100, 10, 20000
        est = simulate_r2_estimates(rng, ghz_correlations, n, M, K, reps)
        mc_var = est.var(ddof=1)
        r2 = float(ghz_moment_closed(5, 2))
        r4 = float(ghz_moment_closed(5, 4))
        formula = variance_r2_estimator(r2, r4, M, K)
        assert abs(mc_var - formula) / formula < 0.05


class TestMomentEstimate:
    def test_single_record(self):
        rec = SettingStats(10, 7)
        est = moment_estimate([rec], t=2, n_qubits=3)
        assert est.value == pytest.approx(e_hat_t(rec, 2))
        assert est.n_settings == 1

    def test_all_max_counts(self):
        est = moment_estimate([SettingStats(5, 5)] * 4, t=2, n_qubits=2)
        assert est.value == pytest.approx(1.0)

    def test_heterogeneous_k_rejected(self):
        with pytest.raises(ValidationError, match="same shot count"):
            moment_estimate([SettingStats(5, 5), SettingStats(6, 6)], t=2)

    def test_plug_in_variance_source(self):
        est = moment_estimate([SettingStats(10, y) for y in (3, 5, 8, 9)], t=2)
        assert est.variance_source == "plug-in"
        assert est.variance_estimate >= 0.0

    def test_upper_bound_variance_source_small_k(self):
        est = moment_estimate([SettingStats(3, y) for y in (1, 2, 3)], t=2, n_qubits=4)
        assert est.variance_source.startswith("upper-bound")

    def test_end_to_end_unbiased_ghz3(self, rng):
        n, M, K, reps = 3, 50, 8, 20000
        est = simulate_r2_estimates(rng, ghz_correlations, n, M, K, reps)
        truth = float(ghz_moment_closed(3, 2))
        stderr = est.std(ddof=1) / math.sqrt(reps)
        assert abs(est.mean() - truth) <= 3 * stderr


class TestStatsFromOutcomes:
    def test_counts(self):
        outcomes = np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]])
        s = stats_from_outcomes(outcomes)
        assert (s.k_shots, s.y) == (4, 2)

    def test_marginal_subset(self):
        outcomes = np.array([[1, -1, 1], [1, 1, -1]])
        s = stats_from_outcomes(outcomes, subset=[0, 2])
        assert (s.k_shots, s.y) == (2, 1)


class TestVarianceUpperBound:
    def test_single_qubit_k2_is_one(self):
        vb = variance_upper_bound(1, 2)
        assert vb.value == pytest.approx(1.0)

    def test_global_assembly_n5_k10(self):
        A, B, C = variance_coefficients(10)
        expected = (
            float(A) * float(ghz_moment_closed(5, 4))
            + float(B) * float(ghz_moment_closed(5, 2))
            + float(C)
        )
        assert variance_upper_bound(5, 10).value == pytest.approx(expected, rel=1e-12)

    def test_ksep_hypothesis_caps(self):
        vb = variance_upper_bound(11, 125, ksep(5))
        assert vb.r2_bound == ksep_bound_r2(11, 5)
        assert vb.r4_bound == ksep_bound_r4(11, 5)
        assert not vb.fallback_warning

    def test_wclass_falls_back_with_warning(self):
        vb = variance_upper_bound(6, 10, WCLASS)
        assert vb.fallback_warning
        assert vb.r4_bound == ghz_moment_closed(6, 4)

    def test_mproducible_falls_back_to_global_r4(self):
        # only the global fourth-moment cap is safe for producibility
        # hypotheses; the planner's tighter caps live elsewhere
        vb = variance_upper_bound(11, 50, mproducible(4))
        assert vb.fallback_warning
        assert vb.r4_bound == ghz_moment_closed(11, 4)
        assert vb.r2_bound == mprod_bound_r2(11, 4)[0]

    def test_smaller_hypothesis_smaller_variance(self):
        glob = variance_upper_bound(9, 20).value
        hyp = variance_upper_bound(9, 20, ksep(2)).value
        assert hyp < glob
