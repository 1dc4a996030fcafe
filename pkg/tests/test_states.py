"""State models: construction, validation, densification, overlaps."""

import math

import numpy as np
import pytest

from rmcert.errors import ResourceLimitError, ValidationError
from rmcert.moments import correlation
from rmcert.states import (
    BELL,
    GHZ,
    SINGLE,
    BlockProduct,
    DenseState,
    NoisyGhz,
    apply_local_unitaries,
    densify,
    fidelity_to_p,
    ghz_overlap,
    ghz_vector,
    make_noisy_ghz,
    state_descriptor,
)

from conftest import uniform_directions


class TestMakeNoisyGhz:
    def test_validation(self):
        with pytest.raises(ValidationError):
            make_noisy_ghz(0, 0.5)
        with pytest.raises(ValidationError):
            make_noisy_ghz(3, 1.5)
        with pytest.raises(ValidationError):
            make_noisy_ghz(3, -0.1)

    def test_maximally_mixed_single_qubit(self, rng):
        state = make_noisy_ghz(1, 1.0)
        for _ in range(10):
            d = uniform_directions(rng, (1,))
            assert correlation(state, d) == pytest.approx(0.0, abs=1e-12)

    def test_pure_ghz3_moment(self):
        from rmcert.moments import moment_design

        assert moment_design(make_noisy_ghz(3, 0.0), 2) == pytest.approx(4 / 27, abs=1e-12)

    def test_fidelity_anchor_n11(self):
        p = fidelity_to_p(11, 0.76)
        assert p == pytest.approx(0.240117, abs=5e-7)


class TestFidelityToP:
    def test_perfect_fidelity(self):
        assert fidelity_to_p(7, 1.0) == 0.0

    def test_n20(self):
        assert fidelity_to_p(20, 0.44) == pytest.approx(0.560001, abs=5e-7)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            fidelity_to_p(2, 0.25)  # at the 2^-n floor
        with pytest.raises(ValidationError):
            fidelity_to_p(2, 1.01)

    def test_round_trip_against_dense_overlap(self):
        n = 5
        for f in (0.5, 0.76, 0.9):
            p = fidelity_to_p(n, f)
            dense = densify(make_noisy_ghz(n, p))
            assert ghz_overlap(dense) == pytest.approx(f, abs=1e-12)


class TestDensify:
    def test_single_qubit_plus_state(self):
        d = densify(make_noisy_ghz(1, 0.0))
        assert np.allclose(d.data, np.array([1, 1]) / math.sqrt(2))

    def test_two_bell_pairs(self):
        d = densify(BlockProduct(((BELL, 2), (BELL, 2))))
        bell = ghz_vector(2)
        assert np.allclose(d.data, np.kron(bell, bell))

    def test_noisy_ghz4_overlap(self):
        d = densify(make_noisy_ghz(4, 0.5))
        assert not d.is_pure
        assert np.trace(d.data) == pytest.approx(1.0, abs=1e-12)
        assert ghz_overlap(d) == pytest.approx(0.53125, abs=1e-12)
        d.check_positive()

    def test_overlap_formula(self):
        # <ghz|rho|ghz> = (1-p) + p/2^n, checked dense up to n=10
        for n in (2, 6, 10):
            for p in (0.0, 0.3, 1.0):
                if p == 0.0:
                    d = densify(make_noisy_ghz(n, p))
                    assert ghz_overlap(d) == pytest.approx(1.0, abs=1e-12)
                elif n <= 10:
                    d = densify(make_noisy_ghz(n, p))
                    assert ghz_overlap(d) == pytest.approx((1 - p) + p / 2 ** n, abs=1e-12)

    def test_resource_caps(self):
        with pytest.raises(ResourceLimitError):
            densify(make_noisy_ghz(15, 0.5))
        with pytest.raises(ResourceLimitError):
            densify(BlockProduct(tuple([(BELL, 2)] * 13)))

    def test_all_constructors_pass_invariants(self):
        # DenseState.__post_init__ enforces the invariants; these must not raise
        densify(make_noisy_ghz(3, 0.7)).check_positive()
        densify(BlockProduct(((GHZ, 3), (SINGLE, 1))))
        densify(make_noisy_ghz(6, 0.0))


class TestDenseStateValidation:
    def test_bad_norm(self):
        with pytest.raises(ValidationError):
            DenseState(1, np.array([1.0, 1.0]))

    def test_bad_trace(self):
        with pytest.raises(ValidationError):
            DenseState(1, np.eye(2))

    def test_non_hermitian(self):
        m = np.array([[0.5, 0.5], [0.0, 0.5]])
        with pytest.raises(ValidationError):
            DenseState(1, m)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            DenseState(2, np.array([1.0, 0.0]))

    def test_negative_eigenvalue_on_demand(self):
        m = np.diag([1.5, -0.5]).astype(complex)
        state = DenseState(1, m)  # hermitian, trace 1: constructor passes
        with pytest.raises(ValidationError):
            state.check_positive()


class TestBlockProduct:
    def test_bell_size_enforced(self):
        with pytest.raises(ValidationError):
            BlockProduct(((BELL, 3),))

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            BlockProduct((("w", 3),))

    def test_n_qubits(self):
        bp = BlockProduct(((BELL, 2), (GHZ, 3), (SINGLE, 1)))
        assert bp.n_qubits == 6

    def test_correlations_factorize(self, rng):
        # block-product correlation = product of block correlations (dense check)
        bp = BlockProduct(((BELL, 2), (GHZ, 3), (SINGLE, 1)))
        dense = densify(bp)
        for _ in range(20):
            dirs = uniform_directions(rng, (6,))
            left = correlation(dense, dirs)
            right = (
                correlation(densify(BlockProduct(((BELL, 2),))), dirs[:2])
                * correlation(densify(BlockProduct(((GHZ, 3),))), dirs[2:5])
                * correlation(densify(BlockProduct(((SINGLE, 1),))), dirs[5:])
            )
            assert left == pytest.approx(right, abs=1e-12)


class TestLocalUnitaries:
    def test_preserves_validity(self, rng):
        theta = rng.uniform(0, math.pi, 3)
        us = [
            np.array([
                [math.cos(t / 2), -math.sin(t / 2)],
                [math.sin(t / 2), math.cos(t / 2)],
            ])
            for t in theta
        ]
        pure = apply_local_unitaries(densify(make_noisy_ghz(3, 0.0)), us)
        assert pure.is_pure
        mixed = apply_local_unitaries(densify(make_noisy_ghz(3, 0.4)), us)
        mixed.check_positive()


class TestDescriptor:
    def test_strings(self):
        assert state_descriptor(make_noisy_ghz(3, 0.25)) == "noisy-ghz(n=3,p=0.25)"
        assert state_descriptor(BlockProduct(((BELL, 2), (GHZ, 4)))) == "block-product(bell2,ghz4)"
        assert state_descriptor(densify(make_noisy_ghz(2, 0.0))) == "dense(n=2,pure)"
