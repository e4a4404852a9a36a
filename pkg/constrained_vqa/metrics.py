# Energy, in-constraint probability/energy, approximation ratio and optimal mass
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .errors import DegenerateInstanceError, EmptyFeasibleSupportError, ParameterError, SizeError
from .instances import OracleResult
from .problem import DiagonalLandscape
from .simulator.config import SUPPORT_TOLERANCE
from .simulator.statevector import StateVector, expectation_diagonal, probabilities

logger = logging.getLogger(__name__)

# Relative slack under which two basis-state weights count as tied
MODAL_TIE_TOLERANCE = 1e-12


class EvaluationRecord(BaseModel):
    """One row of the optimization log (serialized as one JSON line)"""

    iteration: int = 0
    params: List[float] = []
    objective: Optional[float] = None
    constraint_values: List[float] = []
    max_violation: float = 0.0
    energy: Optional[float] = None
    in_constraint_energy: Optional[float] = None
    in_constraint_probability: Optional[float] = None
    approximation_ratio: Optional[float] = None
    optimal_mass_fraction: Optional[float] = None
    is_optimum_modal: Optional[bool] = None


def _check_length(weights: np.ndarray, other, name: str) -> np.ndarray:
    other = np.asarray(other)
    if other.shape != weights.shape:
        raise SizeError(f"{name} has shape {other.shape}, expected {weights.shape}")
    return other


def _feasible_mass(weights: np.ndarray, mask) -> float:
    mask = _check_length(weights, mask, "mask").astype(bool)
    return float(np.sum(weights[mask]))


def _require_support(weights: np.ndarray, mask) -> float:
    mass = _feasible_mass(weights, mask)
    if mass <= SUPPORT_TOLERANCE:
        raise EmptyFeasibleSupportError(f"Feasible probability mass {mass:.3e} is zero")
    return mass


# Distribution-level kernels. `weights` is |c_s|^2 in exact mode or
# counts/shots in sampled mode, so both modes share one definition.

def pic_of(weights: np.ndarray, mask) -> float:
    return _feasible_mass(weights, mask)


def eic_of(weights: np.ndarray, diag, mask) -> float:
    mass = _require_support(weights, mask)
    diag = _check_length(weights, diag, "diag").astype(float)
    mask = np.asarray(mask, dtype=bool)
    return float(np.sum(weights[mask] * diag[mask])) / mass


def ratio_of(weights: np.ndarray, objective_diag, mask, oracle: OracleResult) -> float:
    best, worst = oracle.canonical_bounds()
    if worst == best:
        raise DegenerateInstanceError(f"f_max == f_min == {oracle.f_max}; approximation ratio undefined")
    return (worst - eic_of(weights, objective_diag, mask)) / (worst - best)


def optimal_mass_of(weights: np.ndarray, mask, optimal_states: Sequence[int]) -> float:
    mass = _require_support(weights, mask)
    return float(np.sum(weights[list(optimal_states)])) / mass


def modal_of(weights: np.ndarray, mask, optimal_states: Sequence[int]) -> bool:
    _require_support(weights, mask)
    mask = np.asarray(mask, dtype=bool)
    peak = float(weights[mask].max())
    # A tie between an optimal state and the peak counts as modal
    return any(weights[s] >= peak * (1 - MODAL_TIE_TOLERANCE) for s in optimal_states)


# State-level operations

def in_constraint_probability(state: StateVector, mask) -> float:
    """P_IC: total probability on feasible basis states"""
    return pic_of(probabilities(state), mask)


def in_constraint_energy(state: StateVector, diag, mask) -> float:
    """
    E_IC: energy of the state projected on the feasible set and renormalized

    Raises:
        EmptyFeasibleSupportError: P_IC is zero
    """
    return eic_of(probabilities(state), diag, mask)


def approximation_ratio(state: StateVector, objective_diag, mask, oracle: OracleResult) -> float:
    """(worst - E_IC) / (worst - best) with oracle values in minimization form"""
    return ratio_of(probabilities(state), objective_diag, mask, oracle)


def optimal_mass_fraction(state: StateVector, mask, optimal_states: Sequence[int]) -> float:
    """Probability on the optimal states divided by P_IC"""
    return optimal_mass_of(probabilities(state), mask, optimal_states)


def is_optimum_modal(state: StateVector, mask, optimal_states: Sequence[int]) -> bool:
    """True when the most likely feasible state is optimal (ties count as optimal)"""
    return modal_of(probabilities(state), mask, optimal_states)


def sample_counts(state: StateVector, shots: int, seed: int) -> np.ndarray:
    """Seeded multinomial sample of basis states, returned as per-state counts"""
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    probs = probabilities(state)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.multinomial(shots, probs / probs.sum())


def _support_metrics(weights: np.ndarray, landscape: DiagonalLandscape, oracle: OracleResult) -> Dict:
    mask = landscape.feasible_mask
    metrics = {
        "in_constraint_energy": eic_of(weights, landscape.penalized_diag, mask),
        "optimal_mass_fraction": optimal_mass_of(weights, mask, oracle.optimal_states),
        "is_optimum_modal": modal_of(weights, mask, oracle.optimal_states),
        "approximation_ratio": None,
    }
    try:
        metrics["approximation_ratio"] = ratio_of(weights, landscape.objective_diag, mask, oracle)
    except DegenerateInstanceError:
        logger.warning("Degenerate instance: approximation ratio not recorded")
    return metrics


def sample_metrics(
    state: StateVector,
    landscape: DiagonalLandscape,
    oracle: OracleResult,
    shots: int,
    seed: int,
) -> Dict:
    """
    P_IC, E_IC, rho, optimal mass and the modal flag of a seeded finite sample

    Raises:
        EmptyFeasibleSupportError: no sampled basis state is feasible
    """
    weights = sample_counts(state, shots, seed) / shots
    return {
        "in_constraint_probability": pic_of(weights, landscape.feasible_mask),
        **_support_metrics(weights, landscape, oracle),
    }


def evaluate_state(
    state: StateVector,
    landscape: DiagonalLandscape,
    oracle: OracleResult,
    iteration: int = 0,
    params: Sequence[float] = (),
    shots: Optional[int] = None,
    sample_seed: int = 0,
) -> EvaluationRecord:
    """
    Every logged metric of one state

    With `shots` set, P_IC, E_IC, rho and the optimal mass come from a seeded
    sample of the state; the energy stays exact. Metrics that need feasible
    support are left as None when there is none.
    """
    mask = landscape.feasible_mask
    if shots is None:
        weights = probabilities(state)
    else:
        weights = sample_counts(state, shots, sample_seed) / shots
    record = EvaluationRecord(
        iteration=iteration,
        params=[float(p) for p in params],
        energy=expectation_diagonal(state, landscape.penalized_diag),
        in_constraint_probability=pic_of(weights, mask),
    )
    if record.in_constraint_probability > SUPPORT_TOLERANCE:
        record = record.model_copy(update=_support_metrics(weights, landscape, oracle))
    return record
