"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Tolerances are fixed here and nowhere else.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import contextlib
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from rmcert.bounds import ksep, ksep_bound_r2, ksep_saturator, mprod_bound_r2, mproducible, FULLSEP
from rmcert.certify import VIOLATED, certify_all
from rmcert.certify import test_criterion as check_criterion
from rmcert.confidence import (
    BERNSTEIN_RANGE,
    BERNSTEIN_VARIANCE,
    CANTELLI_TWO_SIDED,
    CHERNOFF_VARIANCE,
    cantelli_two_sided,
    chernoff_error_bar,
    two_sided_error_bar,
)
from rmcert.estimation import (
    MomentEstimate,
    variance_coefficients,
    variance_upper_bound,
)
from rmcert.moments import bell_product_r4, ghz_moment_closed, moment_design
from rmcert.planner import certification_budget, min_total_budget, required_m
from rmcert.sampling import run_experiment
from rmcert.states import BELL, BlockProduct, densify, fidelity_to_p, make_noisy_ghz

from conftest import (
    binomial_expectation_poly,
    e_in_p_poly,
    ghz_correlations,
    poly_add,
    poly_pow,
    poly_scale,
    poly_trim,
    product_zero_correlations,
    uniform_directions,
)
from test_estimation import exact_e_hat, exact_p_hat


@contextlib.contextmanager
def criterion_line(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {number} ({title}): FAIL")
        raise
    print(f"[acceptance] criterion {number} ({title}): PASS")


PRODUCIBILITY_TABLE_11 = {
    2: Fraction(1, 729),
    3: Fraction(4, 2187),
    4: Fraction(4, 2187),
    5: Fraction(16, 6561),
    6: Fraction(176, 59049),
    7: Fraction(64, 19683),
    8: Fraction(64, 19683),
    9: Fraction(256, 59049),
    10: Fraction(256, 59049),
}

PRODUCIBILITY_TABLE_20 = {
    2: Fraction(1, 59049),
    3: Fraction(1, 59049),
    4: Fraction(1, 59049),
    5: Fraction(65536, 3486784401),
    # m=6: Bell x GHZ_6^3 attains (1/3)(33/729)^3 = 1331/43046721, strictly
    # above the four-GHZ_5 product that m=5 already reaches; verified by
    # exhaustive partition enumeration
    6: Fraction(1331, 43046721),
    7: Fraction(45056, 1162261467),
    8: Fraction(1849, 43046721),
    9: Fraction(65536, 1162261467),
    10: Fraction(361, 4782969),
}


def test_criterion_1_exact_producibility_tables():
    with criterion_line(1, "exact producibility tables"):
        start = time.perf_counter()
        for n, table in ((11, PRODUCIBILITY_TABLE_11), (20, PRODUCIBILITY_TABLE_20)):
            for m, expected in table.items():
                value, assignment = mprod_bound_r2(n, m)
                assert value == expected, (n, m)
                assert sum(i * c for i, c in enumerate(assignment, 1)) == n
                prod = Fraction(1)
                for i, c in enumerate(assignment, 1):
                    prod *= ghz_moment_closed(i, 2) ** c
                assert prod == expected
        assert time.perf_counter() - start < 1.0


def test_criterion_2_closed_forms_vs_design_sums():
    with criterion_line(2, "closed forms vs design sums"):
        start = time.perf_counter()
        for n in range(2, 9):
            got = moment_design(densify(make_noisy_ghz(n, 0.0)), 2)
            assert abs(got - float(ghz_moment_closed(n, 2))) < 1e-12, n
        for n in range(2, 8):
            got = moment_design(densify(make_noisy_ghz(n, 0.0)), 4)
            assert abs(got - float(ghz_moment_closed(n, 4))) < 1e-12, n
        for n in (2, 4, 6):
            bp = BlockProduct(tuple([(BELL, 2)] * (n // 2)))
            got = moment_design(densify(bp), 4)
            assert abs(got - float(bell_product_r4(n))) < 1e-12, n
        assert time.perf_counter() - start < 60.0


def test_criterion_3_saturating_fixtures():
    with criterion_line(3, "k-separability saturating fixtures"):
        for n in range(5, 11):
            for k in range(2, (n - 1) // 2 + 1):
                fixture = densify(ksep_saturator(n, k))
                got = moment_design(fixture, 2)
                assert abs(got - float(ksep_bound_r2(n, k))) < 1e-12, (n, k)


def test_criterion_4_estimator_identities():
    with criterion_line(4, "estimator polynomial identities"):
        start = time.perf_counter()
        for K in range(1, 7):
            for k in range(1, K + 1):
                values = [exact_p_hat(K, y, k) for y in range(K + 1)]
                got = binomial_expectation_poly(K, values)
                assert poly_trim(got) == [Fraction(0)] * k + [Fraction(1)], (K, k)
        for K in range(2, 11):
            values = [exact_e_hat(K, y, 2) ** 2 for y in range(K + 1)]
            got = binomial_expectation_poly(K, values)
            A, B, C = variance_coefficients(K)
            expected = poly_trim(poly_add(
                poly_add(poly_scale(poly_pow(e_in_p_poly(), 4), A),
                         poly_scale(poly_pow(e_in_p_poly(), 2), B)),
                [C],
            ))
            assert got == expected, K
        assert variance_coefficients(3) == (0, Fraction(2, 3), Fraction(1, 3))
        assert time.perf_counter() - start < 10.0


REFERENCE_BUDGETS = [
    (11, 0.76, 4, 3685, 125),
    (11, 0.76, 6, 571082, 105),
    (20, 0.44, 3, 11062, 4875),
    (20, 0.44, 4, 18752, 4420),
]


def test_criterion_5_reference_budgets():
    with criterion_line(5, "certification budget reproduction"):
        for n, f, m, m_ref, k_ref in REFERENCE_BUDGETS:
            target = f ** 2 * float(ghz_moment_closed(n, 2))
            plan = certification_budget(n, mproducible(m), target, 0.9)
            m_tot_ref = m_ref * k_ref
            assert abs(plan.m_total - m_tot_ref) / m_tot_ref < 0.02, (n, m)
            assert abs(plan.n_settings - m_ref) / m_ref < 0.05, (n, m)
            assert abs(plan.k_shots - k_ref) / k_ref < 0.05, (n, m)


def test_criterion_6_error_bar_ratios():
    with criterion_line(6, "Chernoff/Cantelli half-width ratios"):
        vb, M, K = 0.05, 10 ** 6, 10
        for gamma, expected in ((0.95, 2.29), (0.99, 4.33)):
            chern = chernoff_error_bar(M, K, gamma, vb)
            assert chern.valid and chern.eta == 1.0
            cant = cantelli_two_sided(vb / M, gamma)
            assert abs(cant / chern.delta - expected) <= 0.01, gamma


def fitted_log10_slope(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.log10(np.asarray(ys, dtype=float))
    return np.polyfit(xs, ys, 1)[0]


def test_criterion_7_scaling_laws():
    with criterion_line(7, "measurement-budget scaling laws"):
        start = time.perf_counter()
        ns = list(range(10, 41))
        totals = [min_total_budget(n, 0.9, 0.1).m_total for n in ns]
        slope = fitted_log10_slope(ns, totals)
        assert abs(slope - math.log10(1.5)) <= 0.05
        # fixed-K regimes of M(N): flat-variance region then shot-noise floor
        K = 10 ** 4
        low_ns = list(range(6, 15))
        low = [required_m(n, K, 0.9, 0.1) for n in low_ns]
        assert abs(fitted_log10_slope(low_ns, low) - math.log10(1.2)) <= 0.05
        high_ns = list(range(40, 61))
        high = [required_m(n, K, 0.9, 0.1) for n in high_ns]
        assert abs(fitted_log10_slope(high_ns, high) - math.log10(2.25)) <= 0.05
        assert time.perf_counter() - start < 60.0


def test_criterion_8_statistical_coverage():
    with criterion_line(8, "coverage and false-violation rates"):
        rng = np.random.default_rng(881)
        reps, M, K, gamma = 600, 80, 10, 0.9
        floor = gamma - 3 * math.sqrt(0.09 / 500)
        for n in (3, 5):
            truth = float(ghz_moment_closed(n, 2))
            dirs = uniform_directions(rng, (reps, M, n))
            e = ghz_correlations(dirs)
            y = rng.binomial(K, np.clip((1 + e) / 2, 0, 1))
            est = (4.0 * y * (y - 1.0) / (K * (K - 1.0)) - 4.0 * y / K + 1.0).mean(axis=1)
            vb = variance_upper_bound(n, K).value
            for method in (CANTELLI_TWO_SIDED, BERNSTEIN_RANGE,
                           CHERNOFF_VARIANCE, BERNSTEIN_VARIANCE):
                delta = two_sided_error_bar(method, M, K, gamma, vb).delta
                coverage = float(np.mean(np.abs(est - truth) <= delta))
                assert coverage >= floor, (n, method, coverage)
        # false-violation rate for full separability on a product state
        n_prod, M_prod, K_prod = 4, 400, 12
        dirs = uniform_directions(rng, (reps, M_prod, n_prod))
        e = product_zero_correlations(dirs)
        y = rng.binomial(K_prod, (1 + e) / 2)
        per = 4.0 * y * (y - 1.0) / (K_prod * (K_prod - 1.0)) - 4.0 * y / K_prod + 1.0
        violations = 0
        for row in per:
            est = MomentEstimate(order=2, value=float(row.mean()),
                                 n_settings=M_prod, k_shots=K_prod,
                                 per_setting=row, n_qubits=n_prod)
            v = check_criterion(est, FULLSEP, gamma)
            violations += v.verdict == VIOLATED
        rate = violations / reps
        assert rate <= (1 - gamma) + 3 * math.sqrt(0.09 / 500), rate


def test_criterion_9_end_to_end_depth_certification():
    with criterion_line(9, "end-to-end depth certification"):
        n, f = 11, 0.76
        target = f ** 2 * float(ghz_moment_closed(n, 2))
        plan = certification_budget(n, mproducible(4), target, 0.9)
        state = make_noisy_ghz(n, fidelity_to_p(n, f))
        hits = 0
        reps = 100
        for rep in range(reps):
            records = run_experiment(state, plan.n_settings, plan.k_shots,
                                     seed=52000 + rep)
            report = certify_all(records, n, 0.9)
            hits += report.depth is not None and report.depth >= 5
        assert hits >= 85, hits


def test_criterion_10_reproducibility(tmp_path):
    with criterion_line(10, "bit-exact reproducibility"):
        import json

        from rmcert.cli import main

        rec1, rec2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
        for path in (rec1, rec2):
            code = main(["simulate", "--n", "7", "--fidelity", "0.8", "--m", "50",
                         "--k", "12", "--seed", "12345", "--out", str(path)])
            assert code == 0
        assert rec1.read_bytes() == rec2.read_bytes()
        out1, out2 = tmp_path / "v1.json", tmp_path / "v2.json"
        for path in (out1, out2):
            code = main(["certify", "--in", str(rec1), "--gamma", "0.9",
                         "--reproducible", "--out", str(path)])
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        json.loads(out1.read_text())
