# Exact statevector simulation of the gates the two ansatze need
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import QubitIndexError, SizeError
from .config import COMPLEX_DTYPE, MAX_QUBITS, MIN_QUBITS, NORM_TOLERANCE

logger = logging.getLogger(__name__)

# Basis index convention: bit i of the integer index is the value of x_i
# (qubit 0 is the least significant bit).


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes c_s of an n-qubit pure state"""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_qubit_count(self.n_qubits)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"Expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )
        norm_sq = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOLERANCE:
            raise SizeError(f"State is not normalized (squared norm {norm_sq:.12f})")
        self.amplitudes.setflags(write=False)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        """
        Build a state from raw amplitudes

        Args:
            amplitudes: Sequence of 2^n complex numbers
            normalize: Rescale to unit norm instead of rejecting unnormalized input

        Returns:
            StateVector
        """
        amps = np.array(amplitudes, dtype=COMPLEX_DTYPE)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise SizeError(f"Amplitude count must be a power of two >= 2, got {amps.size}")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise SizeError("Cannot normalize the zero vector")
            amps = amps / norm
        return cls(int(amps.size).bit_length() - 1, amps)


def _check_qubit_count(n: int):
    if not MIN_QUBITS <= n <= MAX_QUBITS:
        raise SizeError(f"Qubit count must be in [{MIN_QUBITS}, {MAX_QUBITS}], got {n}")


def _check_qubit(state: StateVector, qubit: int):
    if not 0 <= qubit < state.n_qubits:
        raise QubitIndexError(f"Qubit {qubit} out of range for {state.n_qubits} qubits")


def _check_diagonal(state: StateVector, diag) -> np.ndarray:
    diag = np.asarray(diag, dtype=float)
    if diag.shape != (state.dim,):
        raise SizeError(f"Diagonal has shape {diag.shape}, expected ({state.dim},)")
    return diag


@lru_cache(maxsize=32)
def basis_indices(n: int) -> np.ndarray:
    """Read-only array 0..2^n-1, shared by the kernels that test bits"""
    idx = np.arange(1 << n, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _apply_single_qubit(state: StateVector, qubit: int, gate: np.ndarray) -> StateVector:
    # View as (high bits, target bit, low bits); axis 1 is the target qubit
    n = state.n_qubits
    psi = state.amplitudes.reshape(1 << (n - qubit - 1), 2, 1 << qubit)
    out = np.empty_like(psi)
    a0 = psi[:, 0, :]
    a1 = psi[:, 1, :]
    out[:, 0, :] = gate[0, 0] * a0 + gate[0, 1] * a1
    out[:, 1, :] = gate[1, 0] * a0 + gate[1, 1] * a1
    return StateVector(n, out.reshape(-1))


def init_zero(n: int) -> StateVector:
    """|0...0>"""
    _check_qubit_count(n)
    amps = np.zeros(1 << n, dtype=COMPLEX_DTYPE)
    amps[0] = 1.0
    return StateVector(n, amps)


def init_plus(n: int) -> StateVector:
    """Uniform superposition |+>^n, every amplitude 2^(-n/2)"""
    _check_qubit_count(n)
    amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=COMPLEX_DTYPE)
    return StateVector(n, amps)


def ry_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=COMPLEX_DTYPE)


def rx_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=COMPLEX_DTYPE)


def apply_ry(state: StateVector, qubit: int, angle: float) -> StateVector:
    """Apply Ry(angle) to one qubit"""
    _check_qubit(state, qubit)
    return _apply_single_qubit(state, qubit, ry_matrix(angle))


def apply_cz(state: StateVector, qubit_a: int, qubit_b: int) -> StateVector:
    """Negate every amplitude whose index has both target bits set"""
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    if qubit_a == qubit_b:
        raise QubitIndexError(f"CZ needs two distinct qubits, got {qubit_a} twice")
    idx = basis_indices(state.n_qubits)
    both = ((idx >> qubit_a) & (idx >> qubit_b) & 1).astype(bool)
    amps = state.amplitudes.copy()
    amps[both] *= -1
    return StateVector(state.n_qubits, amps)


def apply_diagonal_phase(state: StateVector, diag, gamma: float) -> StateVector:
    """Multiply c_s by exp(-i * gamma * diag[s])"""
    diag = _check_diagonal(state, diag)
    return StateVector(state.n_qubits, state.amplitudes * np.exp(-1j * gamma * diag))


def apply_mixer(state: StateVector, beta: float) -> StateVector:
    """
    Exact exp(-i * beta * sum_j X_j)

    The X_j terms commute, so this is Rx(2 * beta) on every qubit in turn.
    """
    gate = rx_matrix(2 * beta)
    out = state
    for qubit in range(state.n_qubits):
        out = _apply_single_qubit(out, qubit, gate)
    return out


def probabilities(state: StateVector) -> np.ndarray:
    """|c_s|^2 for every basis state"""
    return np.abs(state.amplitudes) ** 2


def expectation_diagonal(state: StateVector, diag) -> float:
    """Sum_s |c_s|^2 * diag[s]"""
    diag = _check_diagonal(state, diag)
    # np.sum uses pairwise summation: same input, same bits
    return float(np.sum(probabilities(state) * diag))
