# This module runs one variational optimization with a chosen objective
import logging
from typing import Dict, List, Literal, Optional

import numpy as np

from .config import (
    INIT_PARAM_HIGH,
    INIT_PARAM_LOW,
    PIC_BOUND,
    QAOA_DEPTH,
    QAOA_PHASE,
    TWOLOCAL_REPS,
    ZERO_SUPPORT_SENTINEL_OFFSET,
)
from .errors import ParameterError
from .instances import OracleResult, brute_force
from .metrics import EvaluationRecord, eic_of, evaluate_state, pic_of
from .optimizer import Cobyla, InequalityConstraint, OptimizationTrace, OptimizerConfig
from .problem import ConstrainedProblem, build_landscape
from .simulator.ansatz import Ansatz, QaoaAnsatz, TwoLocalAnsatz, initial_params, prepare_state
from .simulator.config import SUPPORT_TOLERANCE
from .simulator.statevector import expectation_diagonal, probabilities

logger = logging.getLogger(__name__)

Algorithm = Literal["vqe", "qaoa"]
Method = Literal["penalty_energy", "ic_energy", "ic_energy_bounded"]
METHODS = ("penalty_energy", "ic_energy", "ic_energy_bounded")

# Fields of an EvaluationRecord that come from the state rather than the optimizer
STATE_FIELDS = {
    "energy",
    "in_constraint_energy",
    "in_constraint_probability",
    "approximation_ratio",
    "optimal_mass_fraction",
    "is_optimum_modal",
}


class InConstraintSolver:
    """
    Variational solver for one constrained problem

    `method` picks the optimizer objective:
        penalty_energy     <psi|H_penalized|psi>
        ic_energy          energy of the feasible projection of psi, renormalized
        ic_energy_bounded  ic_energy plus the constraint P_IC(theta) >= pic_bound

    Example:
        solver = InConstraintSolver(problem, "vqe", "ic_energy_bounded")
        trace, final = solver.solve(param_seed=3)
    """

    def __init__(
        self,
        problem: ConstrainedProblem,
        algorithm: Algorithm = "vqe",
        method: Method = "ic_energy_bounded",
        pic_bound: float = PIC_BOUND,
        penalty_lambda: Optional[float] = None,
        qaoa_depth: int = QAOA_DEPTH,
        twolocal_reps: int = TWOLOCAL_REPS,
        qaoa_phase: Literal["penalized", "plain"] = QAOA_PHASE,
        shots: Optional[int] = None,
        sample_seed: int = 0,
        optimizer_config: Optional[OptimizerConfig] = None,
        oracle: Optional[OracleResult] = None,
    ):
        if method not in METHODS:
            raise ParameterError(f"Unknown method '{method}'")
        if method == "ic_energy_bounded" and not 0 < pic_bound < 1:
            raise ParameterError(f"pic_bound must lie in (0, 1), got {pic_bound}")
        if qaoa_phase not in ("penalized", "plain"):
            raise ParameterError(f"qaoa_phase must be 'penalized' or 'plain', got '{qaoa_phase}'")

        self.problem = problem
        self.method = method
        self.pic_bound = pic_bound
        self.shots = shots
        self.sample_seed = sample_seed
        self.optimizer_config = optimizer_config or OptimizerConfig()
        self.landscape = build_landscape(problem, penalty_lambda)
        self.oracle = oracle or brute_force(problem)
        self.ansatz = self._build_ansatz(algorithm, qaoa_depth, twolocal_reps, qaoa_phase)
        # Returned when the state has no feasible support
        self.sentinel = float(self.landscape.penalized_diag.max()) + ZERO_SUPPORT_SENTINEL_OFFSET
        self._cache_key: Optional[bytes] = None
        self._cache_probs: Optional[np.ndarray] = None
        self._cache_state = None
        self._evaluations = 0
        self._all_feasible = self.landscape.feasible_count == self.landscape.feasible_mask.size

    def _build_ansatz(self, algorithm, depth, reps, phase) -> Ansatz:
        n = self.problem.n_vars
        if algorithm == "qaoa":
            diag = self.landscape.penalized_diag if phase == "penalized" else self.landscape.objective_diag
            return QaoaAnsatz(n, depth, diag)
        if algorithm == "vqe":
            return TwoLocalAnsatz(n, reps)
        raise ParameterError(f"Unknown algorithm '{algorithm}'")

    def _probabilities(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        key = params.tobytes()
        if key != self._cache_key:
            self._cache_state = prepare_state(self.ansatz, params)
            self._cache_probs = probabilities(self._cache_state)
            self._cache_key = key
        return self._cache_probs

    def objective(self, params) -> float:
        """Value the optimizer minimizes at `params`"""
        probs = self._probabilities(params)
        # Without infeasible states the projection is the identity
        if self.method == "penalty_energy" or self._all_feasible:
            return expectation_diagonal(self._cache_state, self.landscape.penalized_diag)
        if pic_of(probs, self.landscape.feasible_mask) <= SUPPORT_TOLERANCE:
            return self.sentinel
        return eic_of(probs, self.landscape.penalized_diag, self.landscape.feasible_mask)

    def pic_constraint(self, params) -> float:
        """P_IC(theta) - pic_bound, feasible when >= 0"""
        return pic_of(self._probabilities(params), self.landscape.feasible_mask) - self.pic_bound

    def constraints(self) -> List[InequalityConstraint]:
        if self.method == "ic_energy_bounded":
            return [InequalityConstraint(self.pic_constraint, label=f"P_IC >= {self.pic_bound}")]
        return []

    def describe(self, params) -> Dict:
        """State metrics logged next to each optimizer evaluation"""
        self._probabilities(params)
        record = evaluate_state(
            self._cache_state,
            self.landscape,
            self.oracle,
            shots=self.shots,
            sample_seed=self.sample_seed + self._evaluations,
        )
        self._evaluations += 1
        return record.model_dump(include=STATE_FIELDS)

    def evaluate(self, params, iteration: int = 0) -> EvaluationRecord:
        """Full exact record at `params`, objective and constraint values included"""
        self._probabilities(params)
        record = evaluate_state(self._cache_state, self.landscape, self.oracle, iteration, params)
        record.objective = self.objective(params)
        record.constraint_values = [c(np.asarray(params, dtype=float)) for c in self.constraints()]
        record.max_violation = max([0.0] + [-v for v in record.constraint_values])
        return record

    def initial_params(self, param_seed: int) -> np.ndarray:
        return initial_params(self.ansatz, param_seed, INIT_PARAM_LOW, INIT_PARAM_HIGH)

    def solve(self, x0=None, param_seed: Optional[int] = None, monitor=None):
        """
        Run the optimizer from x0 (or seeded uniform parameters)

        Without x0 the start point is drawn with param_seed, falling back to the
        optimizer config seed.

        Returns:
            (OptimizationTrace, EvaluationRecord): the trace and the exact record at best_params
        """
        if x0 is None:
            x0 = self.initial_params(self.optimizer_config.seed if param_seed is None else param_seed)
        self._evaluations = 0
        optimizer = Cobyla(self.optimizer_config)
        if monitor is not None:
            optimizer.attach_monitor(monitor)
        trace: OptimizationTrace = optimizer.minimize(
            self.objective, self.constraints(), x0, describe=self.describe
        )
        final = self.evaluate(trace.best_params, trace.best_iteration)
        if self.method == "ic_energy_bounded" and final.in_constraint_probability < self.pic_bound:
            trace.constraint_violated = True
            logger.warning(
                f"Final P_IC {final.in_constraint_probability:.4f} is below the bound {self.pic_bound}"
            )
        return trace, final
