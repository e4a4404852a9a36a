import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constrained_vqa.errors import QubitIndexError, SizeError
from constrained_vqa.simulator.statevector import (
    StateVector,
    apply_cz,
    apply_diagonal_phase,
    apply_mixer,
    apply_ry,
    expectation_diagonal,
    init_plus,
    init_zero,
    probabilities,
)

angles = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)


def _state(n, seed):
    gen = np.random.Generator(np.random.PCG64(seed))
    amps = gen.normal(size=1 << n) + 1j * gen.normal(size=1 << n)
    return StateVector.from_amplitudes(amps, normalize=True)


class TestInit:
    def test_zero_state(self):
        np.testing.assert_array_equal(init_zero(1).amplitudes, [1, 0])
        np.testing.assert_array_equal(init_zero(2).amplitudes, [1, 0, 0, 0])
        assert np.linalg.norm(init_zero(3).amplitudes) == pytest.approx(1.0)

    def test_plus_state(self):
        np.testing.assert_allclose(init_plus(1).amplitudes, [1 / math.sqrt(2)] * 2)
        np.testing.assert_allclose(init_plus(2).amplitudes, [0.5] * 4)
        np.testing.assert_allclose(probabilities(init_plus(4)), np.full(16, 1 / 16))

    @pytest.mark.parametrize("n", [0, 25, -1])
    def test_qubit_count_out_of_range(self, n):
        with pytest.raises(SizeError):
            init_zero(n)
        with pytest.raises(SizeError):
            init_plus(n)

    def test_rejects_unnormalized_amplitudes(self):
        with pytest.raises(SizeError):
            StateVector(1, np.array([1.0, 1.0], dtype=complex))

    def test_rejects_wrong_length(self):
        with pytest.raises(SizeError):
            StateVector(2, np.array([1.0, 0.0], dtype=complex))

    def test_amplitudes_are_read_only(self):
        state = init_zero(2)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0


class TestRy:
    def test_zero_angle_is_identity(self):
        state = _state(3, 1)
        np.testing.assert_allclose(apply_ry(state, 1, 0.0).amplitudes, state.amplitudes)

    def test_half_turn_flips_zero(self):
        np.testing.assert_allclose(apply_ry(init_zero(1), 0, math.pi).amplitudes, [0, 1], atol=1e-15)

    def test_quarter_turn(self):
        np.testing.assert_allclose(apply_ry(init_zero(1), 0, math.pi / 2).amplitudes, [1 / math.sqrt(2)] * 2)

    def test_targets_the_right_bit(self):
        # qubit 1 of |00> rotated by pi gives index 2
        out = apply_ry(init_zero(2), 1, math.pi)
        np.testing.assert_allclose(probabilities(out), [0, 0, 1, 0], atol=1e-15)

    @pytest.mark.parametrize("qubit", [-1, 2])
    def test_qubit_out_of_range(self, qubit):
        with pytest.raises(QubitIndexError):
            apply_ry(init_zero(2), qubit, 0.1)


class TestCz:
    def test_phase_flip_on_11(self):
        basis = np.zeros(4, dtype=complex)
        basis[3] = 1
        out = apply_cz(StateVector(2, basis), 0, 1)
        np.testing.assert_array_equal(out.amplitudes, [0, 0, 0, -1])

    @pytest.mark.parametrize("index", [0, 1, 2])
    def test_other_basis_states_unchanged(self, index):
        basis = np.zeros(4, dtype=complex)
        basis[index] = 1
        np.testing.assert_array_equal(apply_cz(StateVector(2, basis), 0, 1).amplitudes, basis)

    def test_involution_and_symmetry(self):
        state = _state(3, 2)
        np.testing.assert_allclose(apply_cz(apply_cz(state, 0, 2), 0, 2).amplitudes, state.amplitudes)
        np.testing.assert_array_equal(apply_cz(state, 2, 0).amplitudes, apply_cz(state, 0, 2).amplitudes)

    @pytest.mark.parametrize("a,b", [(1, 1), (0, 3), (-1, 0)])
    def test_invalid_qubits(self, a, b):
        with pytest.raises(QubitIndexError):
            apply_cz(init_zero(3), a, b)


class TestDiagonalPhase:
    def test_gamma_zero_is_identity(self):
        state = _state(2, 3)
        out = apply_diagonal_phase(state, [1.0, 2.0, 3.0, 4.0], 0.0)
        np.testing.assert_allclose(out.amplitudes, state.amplitudes)

    def test_constant_diagonal_is_global_phase(self):
        state = _state(2, 4)
        out = apply_diagonal_phase(state, [2.5] * 4, 0.8)
        np.testing.assert_allclose(out.amplitudes, state.amplitudes * np.exp(-1j * 0.8 * 2.5))
        np.testing.assert_allclose(probabilities(out), probabilities(state))

    def test_matches_elementwise_oracle(self):
        out = apply_diagonal_phase(init_plus(1), [0.0, math.pi], 1.0)
        expected = np.array([1, np.exp(-1j * math.pi)]) / math.sqrt(2)
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)
        np.testing.assert_allclose(out.amplitudes[1], -1 / math.sqrt(2), atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            apply_diagonal_phase(init_plus(2), [0.0, 1.0], 0.3)


class TestMixer:
    def test_beta_zero_is_identity(self):
        state = _state(3, 5)
        np.testing.assert_allclose(apply_mixer(state, 0.0).amplitudes, state.amplitudes)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_half_pi_flips_every_qubit(self, n):
        out = apply_mixer(init_zero(n), math.pi / 2)
        expected = np.zeros(1 << n, dtype=complex)
        expected[-1] = (-1j) ** n
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)

    def test_quarter_pi_single_qubit(self):
        np.testing.assert_allclose(probabilities(apply_mixer(init_zero(1), math.pi / 4)), [0.5, 0.5])


class TestExpectation:
    def test_basis_state(self):
        basis = np.zeros(8, dtype=complex)
        basis[5] = 1
        diag = np.arange(8, dtype=float) * 1.5
        assert expectation_diagonal(StateVector(3, basis), diag) == diag[5]

    def test_uniform_gives_mean(self):
        diag = np.array([3.0, -1.0, 4.0, 1.5])
        assert expectation_diagonal(init_plus(2), diag) == pytest.approx(diag.mean(), abs=1e-15)

    def test_matches_summation_oracle(self, rng):
        state = _state(3, 6)
        diag = rng.normal(size=8)
        oracle = sum(abs(c) ** 2 * d for c, d in zip(state.amplitudes, diag))
        assert expectation_diagonal(state, diag) == pytest.approx(oracle, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            expectation_diagonal(init_plus(2), [1.0])

    def test_deterministic(self):
        state = _state(10, 7)
        diag = np.random.Generator(np.random.PCG64(0)).normal(size=1 << 10)
        assert expectation_diagonal(state, diag) == expectation_diagonal(state, diag)


class TestProbabilities:
    def test_known_states(self):
        np.testing.assert_array_equal(probabilities(init_zero(1)), [1, 0])
        np.testing.assert_allclose(probabilities(init_plus(2)), [0.25] * 4)

    def test_nonnegative_and_normalized(self):
        probs = probabilities(_state(4, 8))
        assert np.all(probs >= 0)
        assert probs.sum() == pytest.approx(1.0, abs=1e-10)


class TestUnitarity:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), beta=angles, gamma=angles, n=st.integers(1, 5))
    def test_inverse_evolutions(self, seed, beta, gamma, n):
        state = _state(n, seed)
        diag = np.random.Generator(np.random.PCG64(seed)).normal(size=1 << n)
        back = apply_mixer(apply_mixer(state, beta), -beta)
        np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-9)
        back = apply_diagonal_phase(apply_diagonal_phase(state, diag, gamma), diag, -gamma)
        np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), angle=angles, n=st.integers(2, 5))
    def test_norm_preserved(self, seed, angle, n):
        state = _state(n, seed)
        for out in (apply_ry(state, n - 1, angle), apply_cz(state, 0, n - 1), apply_mixer(state, angle)):
            assert abs(np.sum(probabilities(out)) - 1) <= 1e-10
