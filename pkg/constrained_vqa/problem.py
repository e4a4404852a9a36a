# Constrained binary quadratic problems and their diagonal landscapes
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import SizeError
from .simulator.config import MAX_QUBITS
from .simulator.statevector import basis_indices

logger = logging.getLogger(__name__)

ConstraintKind = Literal["pair_at_most_one", "pair_at_least_one", "cardinality_eq"]
PAIR_KINDS = ("pair_at_most_one", "pair_at_least_one")


class ConstraintSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ConstraintKind
    vars: Tuple[int, ...]
    bound: int = 0

    @model_validator(mode="after")
    def _check_shape(self):
        if self.kind in PAIR_KINDS:
            if len(self.vars) != 2 or self.vars[0] == self.vars[1]:
                raise ValueError(f"{self.kind} needs two distinct variables, got {self.vars}")
        elif not 0 <= self.bound <= len(self.vars):
            raise ValueError(f"cardinality bound {self.bound} outside [0, {len(self.vars)}]")
        return self


class ConstrainedProblem(BaseModel):
    """
    Quadratic objective over binary variables plus pairwise/cardinality constraints

    The JSON form is {n_vars, sense, linear, quadratic: [[i, j, coef], ...],
    offset, constraints: [{kind, vars, bound}, ...], label}.
    """

    model_config = ConfigDict(frozen=True)

    n_vars: int
    sense: Literal["minimize", "maximize"] = "minimize"
    linear: Tuple[float, ...] = ()
    quadratic: Tuple[Tuple[int, int, float], ...] = ()
    offset: float = 0.0
    constraints: Tuple[ConstraintSpec, ...] = ()
    label: str = ""

    @model_validator(mode="after")
    def _check_indices(self):
        if self.n_vars < 1:
            raise ValueError(f"n_vars must be >= 1, got {self.n_vars}")
        if self.linear and len(self.linear) != self.n_vars:
            raise ValueError(f"linear has {len(self.linear)} coefficients for {self.n_vars} variables")
        for i, j, _ in self.quadratic:
            if not (0 <= i <= j < self.n_vars):
                raise ValueError(f"quadratic term ({i}, {j}) must satisfy 0 <= i <= j < {self.n_vars}")
        for spec in self.constraints:
            if any(not 0 <= v < self.n_vars for v in spec.vars):
                raise ValueError(f"constraint {spec.kind} references a variable >= {self.n_vars}")
        return self

    @property
    def sign(self) -> float:
        """Multiplier taking the stated objective to the canonical minimization form"""
        return -1.0 if self.sense == "maximize" else 1.0

    def linear_array(self) -> np.ndarray:
        return np.array(self.linear, dtype=float) if self.linear else np.zeros(self.n_vars)


@dataclass(frozen=True)
class DiagonalLandscape:
    """f(s), the penalized energy and 1_F(s) for every basis state s"""

    n_vars: int
    objective_diag: np.ndarray
    penalized_diag: np.ndarray
    feasible_mask: np.ndarray
    penalty_lambda: float

    @property
    def feasible_count(self) -> int:
        return int(np.count_nonzero(self.feasible_mask))


def _check_bits(problem: ConstrainedProblem, bits: Sequence[int]) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size != problem.n_vars:
        raise SizeError(f"Bitstring has {bits.size} entries, problem has {problem.n_vars} variables")
    return bits


def bits_of(index: int, n: int) -> List[int]:
    """Bitstring [x_0, ..., x_{n-1}] of a basis index (x_0 is the least significant bit)"""
    return [(index >> i) & 1 for i in range(n)]


def index_of(bits: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def evaluate_objective(problem: ConstrainedProblem, bits: Sequence[int]) -> float:
    """Objective in canonical minimization form (negated for maximize problems)"""
    x = _check_bits(problem, bits)
    value = problem.offset + float(np.dot(problem.linear_array(), x))
    for i, j, coef in problem.quadratic:
        value += coef * x[i] * x[j]
    return problem.sign * value


def to_original_sense(problem: ConstrainedProblem, value: float) -> float:
    return problem.sign * value


def _constraint_violation(spec: ConstraintSpec, x: Sequence) -> Union[int, np.ndarray]:
    # x[i] may be a scalar bit or a vector of bits over all basis states
    if spec.kind == "pair_at_most_one":
        i, j = spec.vars
        return x[i] * x[j]
    if spec.kind == "pair_at_least_one":
        i, j = spec.vars
        return (1 - x[i]) * (1 - x[j])
    total = sum(x[v] for v in spec.vars)
    return (total - spec.bound) ** 2


def violation(problem: ConstrainedProblem, bits: Sequence[int]) -> int:
    """Sum of exact penalty terms; zero iff every constraint holds"""
    x = _check_bits(problem, bits)
    return int(sum(_constraint_violation(spec, x) for spec in problem.constraints))


def is_feasible(problem: ConstrainedProblem, bits: Sequence[int]) -> bool:
    x = _check_bits(problem, bits)
    for spec in problem.constraints:
        if spec.kind == "pair_at_most_one":
            ok = x[spec.vars[0]] + x[spec.vars[1]] <= 1
        elif spec.kind == "pair_at_least_one":
            ok = x[spec.vars[0]] + x[spec.vars[1]] >= 1
        else:
            ok = sum(x[v] for v in spec.vars) == spec.bound
        if not ok:
            return False
    return True


def default_penalty(problem: ConstrainedProblem) -> float:
    """
    1 + sum|linear| + sum|Q|

    One unit of violation then outweighs the whole objective range, so the
    penalized ground state is feasible.
    """
    return 1.0 + float(np.sum(np.abs(problem.linear_array()))) + sum(abs(c) for _, _, c in problem.quadratic)


def build_landscape(problem: ConstrainedProblem, penalty_lambda: Optional[float] = None) -> DiagonalLandscape:
    """
    Enumerate all 2^n basis states into objective, penalized and feasibility arrays

    Args:
        problem: The constrained problem
        penalty_lambda: Penalty strength; None selects default_penalty

    Returns:
        DiagonalLandscape
    """
    n = problem.n_vars
    if n > MAX_QUBITS:
        raise SizeError(f"Cannot enumerate {n} variables (max {MAX_QUBITS})")
    if penalty_lambda is None:
        penalty_lambda = default_penalty(problem)
    if penalty_lambda < 0:
        raise ValueError(f"penalty_lambda must be >= 0, got {penalty_lambda}")

    idx = basis_indices(n)
    x = [((idx >> i) & 1).astype(np.int64) for i in range(n)]

    objective = np.full(1 << n, problem.offset, dtype=float)
    for i, coef in enumerate(problem.linear_array()):
        if coef:
            objective += coef * x[i]
    for i, j, coef in problem.quadratic:
        objective += coef * (x[i] * x[j])
    objective *= problem.sign

    viol = np.zeros(1 << n, dtype=np.int64)
    for spec in problem.constraints:
        viol += _constraint_violation(spec, x)
    mask = viol == 0
    # Feasible entries get objective + 0.0, which is bit-identical to objective
    penalized = objective + penalty_lambda * viol

    logger.info(
        f"Landscape '{problem.label}': n={n}, feasible={int(mask.sum())}/{1 << n}, lambda={penalty_lambda:.6g}"
    )
    for arr in (objective, penalized, mask):
        arr.setflags(write=False)
    return DiagonalLandscape(n, objective, penalized, mask, float(penalty_lambda))
