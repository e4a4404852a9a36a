# Parameterized circuits: QAOA layers and the Two-Local Ry/CZ layout
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import ParameterError, SizeError
from .statevector import (
    StateVector,
    apply_cz,
    apply_diagonal_phase,
    apply_mixer,
    apply_ry,
    init_plus,
    init_zero,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QaoaAnsatz:
    """
    p alternating phase/mixer layers on |+>^n

    Parameter layout is (gamma_1..gamma_p, beta_1..beta_p).
    """

    n_qubits: int
    depth: int
    phase_diag: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ParameterError(f"QAOA depth must be >= 1, got {self.depth}")
        if self.phase_diag.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"Phase diagonal has shape {self.phase_diag.shape}, expected ({1 << self.n_qubits},)"
            )


@dataclass(frozen=True)
class TwoLocalAnsatz:
    """Ry rotation layers separated by linear CZ chains, ending with a rotation layer"""

    n_qubits: int
    reps: int = 1

    def __post_init__(self):
        if self.reps < 0:
            raise ParameterError(f"Two-Local reps must be >= 0, got {self.reps}")


Ansatz = Union[QaoaAnsatz, TwoLocalAnsatz]


def param_count(ansatz: Ansatz) -> int:
    if isinstance(ansatz, QaoaAnsatz):
        return 2 * ansatz.depth
    return ansatz.n_qubits * (ansatz.reps + 1)


def _check_params(ansatz: Ansatz, params) -> np.ndarray:
    params = np.asarray(params, dtype=float).reshape(-1)
    expected = param_count(ansatz)
    if params.size != expected:
        raise ParameterError(f"{type(ansatz).__name__} takes {expected} parameters, got {params.size}")
    return params


def qaoa_state(ansatz: QaoaAnsatz, params) -> StateVector:
    params = _check_params(ansatz, params)
    gammas, betas = params[: ansatz.depth], params[ansatz.depth :]
    state = init_plus(ansatz.n_qubits)
    # Rightmost operator of each layer acts first: phase, then mixer
    for gamma, beta in zip(gammas, betas):
        state = apply_diagonal_phase(state, ansatz.phase_diag, gamma)
        state = apply_mixer(state, beta)
    return state


def twolocal_state(ansatz: TwoLocalAnsatz, params) -> StateVector:
    params = _check_params(ansatz, params)
    n = ansatz.n_qubits
    layers = params.reshape(ansatz.reps + 1, n)
    state = init_zero(n)
    for rep, angles in enumerate(layers):
        if rep > 0:
            for qubit in range(n - 1):
                state = apply_cz(state, qubit, qubit + 1)
        for qubit, angle in enumerate(angles):
            state = apply_ry(state, qubit, angle)
    return state


def prepare_state(ansatz: Ansatz, params) -> StateVector:
    """Dispatch to the circuit matching the ansatz type"""
    if isinstance(ansatz, QaoaAnsatz):
        return qaoa_state(ansatz, params)
    return twolocal_state(ansatz, params)


def initial_params(ansatz: Ansatz, seed: int, low: float, high: float) -> np.ndarray:
    """Uniform draws from [low, high], one per parameter, from a PCG64 stream"""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(low, high, size=param_count(ansatz))
