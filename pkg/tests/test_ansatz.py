import itertools
import math
from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from constrained_vqa.errors import ParameterError, SizeError
from constrained_vqa.simulator.ansatz import (
    QaoaAnsatz,
    TwoLocalAnsatz,
    initial_params,
    param_count,
    prepare_state,
    qaoa_state,
    twolocal_state,
)
from constrained_vqa.simulator.statevector import probabilities

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def on_qubit(gate, qubit, n):
    """Dense operator acting on one qubit; qubit 0 is the least significant bit"""
    ops = [I2] * n
    ops[n - 1 - qubit] = gate
    return reduce(np.kron, ops)


def dense_cz(a, b, n):
    idx = np.arange(1 << n)
    return np.diag(np.where(((idx >> a) & (idx >> b) & 1) == 1, -1.0, 1.0)).astype(complex)


def dense_qaoa(diag, gammas, betas, n):
    psi = np.full(1 << n, 2 ** (-n / 2), dtype=complex)
    mixer = sum(on_qubit(X, q, n) for q in range(n))
    for gamma, beta in zip(gammas, betas):
        psi = expm(-1j * gamma * np.diag(diag)) @ psi
        psi = expm(-1j * beta * mixer) @ psi
    return psi


def dense_twolocal(params, n, reps):
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    for rep, layer in enumerate(np.reshape(params, (reps + 1, n))):
        if rep > 0:
            for q in range(n - 1):
                psi = dense_cz(q, q + 1, n) @ psi
        for q, angle in enumerate(layer):
            psi = on_qubit(expm(-1j * angle / 2 * Y), q, n) @ psi
    return psi


class TestParamCount:
    def test_counts(self):
        assert param_count(QaoaAnsatz(2, 3, np.zeros(4))) == 6
        assert param_count(TwoLocalAnsatz(10, 1)) == 20
        assert param_count(TwoLocalAnsatz(6, 2)) == 18

    def test_invalid_ansatz(self):
        with pytest.raises(ParameterError):
            QaoaAnsatz(2, 0, np.zeros(4))
        with pytest.raises(SizeError):
            QaoaAnsatz(2, 1, np.zeros(3))
        with pytest.raises(ParameterError):
            TwoLocalAnsatz(3, -1)


class TestQaoa:
    def test_zero_params_give_plus_state(self):
        ansatz = QaoaAnsatz(3, 2, np.arange(8, dtype=float))
        np.testing.assert_allclose(qaoa_state(ansatz, np.zeros(4)).amplitudes, np.full(8, 2 ** -1.5))

    @pytest.mark.parametrize("beta", [0.0, 0.4, 2.1])
    def test_gamma_zero_keeps_uniform_probabilities(self, beta):
        ansatz = QaoaAnsatz(3, 1, np.arange(8, dtype=float))
        np.testing.assert_allclose(probabilities(qaoa_state(ansatz, [0.0, beta])), np.full(8, 1 / 8), atol=1e-12)

    def test_two_qubit_example(self):
        diag = np.array([0.0, 1.0, 1.0, 2.0])
        state = qaoa_state(QaoaAnsatz(2, 1, diag), [0.7, 0.3])
        np.testing.assert_allclose(state.amplitudes, dense_qaoa(diag, [0.7], [0.3], 2), atol=1e-9)

    @pytest.mark.parametrize("n,p", [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)])
    def test_matches_dense_oracle(self, n, p):
        gen = np.random.Generator(np.random.PCG64(10 * n + p))
        diag = gen.normal(size=1 << n)
        ansatz = QaoaAnsatz(n, p, diag)
        for _ in range(25):
            params = gen.uniform(-math.pi, math.pi, size=2 * p)
            expected = dense_qaoa(diag, params[:p], params[p:], n)
            np.testing.assert_allclose(qaoa_state(ansatz, params).amplitudes, expected, atol=1e-9)

    def test_wrong_param_count(self):
        with pytest.raises(ParameterError):
            qaoa_state(QaoaAnsatz(2, 2, np.zeros(4)), [0.1, 0.2, 0.3])


class TestTwoLocal:
    def test_zero_params_give_zero_state(self):
        state = twolocal_state(TwoLocalAnsatz(3, 2), np.zeros(9))
        np.testing.assert_allclose(state.amplitudes, np.eye(8)[0])

    def test_single_qubit(self):
        state = twolocal_state(TwoLocalAnsatz(1, 1), [math.pi / 2, 0.0])
        np.testing.assert_allclose(state.amplitudes, [1 / math.sqrt(2)] * 2)

    def test_entangled_example(self):
        state = twolocal_state(TwoLocalAnsatz(2, 1), [math.pi / 2, math.pi / 2, 0.0, 0.0])
        np.testing.assert_allclose(state.amplitudes, [0.5, 0.5, 0.5, -0.5], atol=1e-12)

    @pytest.mark.parametrize("n,reps", [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)])
    def test_matches_dense_oracle(self, n, reps):
        gen = np.random.Generator(np.random.PCG64(100 + 10 * n + reps))
        ansatz = TwoLocalAnsatz(n, reps)
        for _ in range(25):
            params = gen.uniform(-math.pi, math.pi, size=n * (reps + 1))
            expected = dense_twolocal(params, n, reps)
            np.testing.assert_allclose(twolocal_state(ansatz, params).amplitudes, expected, atol=1e-9)

    def test_wrong_param_count(self):
        with pytest.raises(ParameterError):
            twolocal_state(TwoLocalAnsatz(2, 1), [0.1])


class TestDispatch:
    def test_prepare_state_matches_direct_calls(self):
        diag = np.array([1.0, -1.0, 0.5, 2.0])
        qaoa = QaoaAnsatz(2, 1, diag)
        twolocal = TwoLocalAnsatz(2, 1)
        np.testing.assert_array_equal(prepare_state(qaoa, [0.2, 0.9]).amplitudes, qaoa_state(qaoa, [0.2, 0.9]).amplitudes)
        params = [0.1, 0.2, 0.3, 0.4]
        np.testing.assert_array_equal(prepare_state(twolocal, params).amplitudes, twolocal_state(twolocal, params).amplitudes)

    def test_initial_params_seeded(self):
        ansatz = TwoLocalAnsatz(4, 1)
        first = initial_params(ansatz, 7, -math.pi, math.pi)
        np.testing.assert_array_equal(first, initial_params(ansatz, 7, -math.pi, math.pi))
        assert first.shape == (8,)
        assert np.all((first >= -math.pi) & (first <= math.pi))
        assert not np.array_equal(first, initial_params(ansatz, 8, -math.pi, math.pi))

    def test_grid_of_small_registers(self):
        # Every n <= 3, reps <= 1 combination produces a normalized state
        for n, reps in itertools.product(range(1, 4), range(2)):
            params = np.linspace(-1, 1, n * (reps + 1))
            assert probabilities(twolocal_state(TwoLocalAnsatz(n, reps), params)).sum() == pytest.approx(1.0)
