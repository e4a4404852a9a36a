"""
Experiment runner: single runs, the p=1 QAOA grid protocol and resumable sweeps.

Sweep directory layout:
    runs/<spec_hash>.json      one RunResult per run
    traces/<spec_hash>.jsonl   one EvaluationRecord per line
    manifest.db                SQLite manifest (status, result path, error)
    manifest.json              the manifest exported, sorted by spec hash
"""
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt
from tqdm import tqdm

from .config import (
    GRID_BETA,
    GRID_GAMMA,
    INSTANCE_RETRY_ATTEMPTS,
    MANIFEST_DB_NAME,
    MANIFEST_JSON_NAME,
    MAX_EVALS,
    PARTITION_OBJECTIVE,
    PIC_BOUND,
    PROFILE_DIR,
    QAOA_DEPTH,
    QAOA_PHASE,
    RHO_BEGIN,
    RHO_END,
    SWEEP_PARALLELISM,
    TWOLOCAL_REPS,
)
from .database import completed_hashes, export_manifest, init_manifest, record_run
from .errors import InfeasibleInstanceError, ParameterError
from .instances import (
    GraphInstance,
    OracleResult,
    PortfolioInstance,
    ProblemClass,
    brute_force,
    generate_instance,
    to_problem,
)
from .metrics import EvaluationRecord
from .optimizer import OptimizationTrace, OptimizerConfig
from .problem import ConstrainedProblem
from .simulator.config import MAX_QUBITS
from .solver import METHODS, Algorithm, InConstraintSolver, Method

logger = logging.getLogger(__name__)

InstanceField = Annotated[Union[GraphInstance, PortfolioInstance], Field(discriminator="kind")]


class RunSpec(BaseModel):
    """Everything that determines one run; seeds included"""

    model_config = ConfigDict(frozen=True)

    problem_class: ProblemClass
    n_vars: int
    algorithm: Algorithm = "vqe"
    qaoa_depth: int = QAOA_DEPTH  # read only when algorithm == qaoa
    method: Method = "ic_energy_bounded"
    pic_bound: float = PIC_BOUND
    penalty_lambda: Optional[float] = None  # None means auto
    max_evals: int = MAX_EVALS
    instance_seed: int = 0
    param_seed: int = 0
    shots: Optional[int] = None  # None means exact
    twolocal_reps: int = TWOLOCAL_REPS
    qaoa_phase: Literal["penalized", "plain"] = QAOA_PHASE
    objective: Literal["cut", "same_side"] = PARTITION_OBJECTIVE
    rho_begin: float = RHO_BEGIN
    rho_end: float = RHO_END

    @field_validator("penalty_lambda", mode="before")
    @classmethod
    def _auto_lambda(cls, value):
        return None if value == "auto" else value

    @field_validator("shots", mode="before")
    @classmethod
    def _exact_shots(cls, value):
        return None if value == "exact" else value

    @model_validator(mode="after")
    def _check_ranges(self):
        if not 1 <= self.n_vars <= MAX_QUBITS:
            raise ValueError(f"n_vars must lie in [1, {MAX_QUBITS}], got {self.n_vars}")
        if self.qaoa_depth < 1:
            raise ValueError(f"qaoa_depth must be >= 1, got {self.qaoa_depth}")
        if self.method == "ic_energy_bounded" and not 0 < self.pic_bound < 1:
            raise ValueError(f"pic_bound must lie in (0, 1), got {self.pic_bound}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1 or exact, got {self.shots}")
        if self.penalty_lambda is not None and self.penalty_lambda < 0:
            raise ValueError(f"penalty_lambda must be >= 0, got {self.penalty_lambda}")
        return self

    def spec_hash(self) -> str:
        """Content hash of the spec, stable across processes and sessions"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class RunResult(BaseModel):
    spec: RunSpec
    instance: InstanceField
    problem: ConstrainedProblem
    oracle: OracleResult
    trace: OptimizationTrace
    final: EvaluationRecord
    lambda_used: float
    shots_mode: Literal["exact", "sampled"] = "exact"
    wall_time: float = 0.0


class GridPoint(BaseModel):
    gamma: float
    beta: float
    in_constraint_probability: float
    approximation_ratio: Optional[float] = None


class TracePoint(BaseModel):
    iteration: int
    in_constraint_probability: Optional[float] = None
    approximation_ratio: Optional[float] = None


class GridResult(BaseModel):
    spec: RunSpec
    points: List[GridPoint]
    metadata: Dict[str, Any] = {}
    traces: Dict[str, List[TracePoint]] = {}


class SweepOutcome(BaseModel):
    path: str
    total: int = 0
    completed: int = 0
    skipped: int = 0
    failed: int = 0
    errors: Dict[str, str] = {}


# RUN BUILDING

def build_instance(spec: RunSpec) -> Tuple[Union[GraphInstance, PortfolioInstance], ConstrainedProblem, OracleResult]:
    """
    Generate the instance, formulate the problem and solve it exhaustively

    An instance without feasible states is replaced by the one of the next
    seed, up to INSTANCE_RETRY_ATTEMPTS tries; the instance keeps its realised seed.
    """
    for attempt in Retrying(
        stop=stop_after_attempt(INSTANCE_RETRY_ATTEMPTS),
        retry=retry_if_exception_type(InfeasibleInstanceError),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    ):
        with attempt:
            seed = spec.instance_seed + attempt.retry_state.attempt_number - 1
            instance = generate_instance(spec.problem_class, spec.n_vars, seed)
            problem = to_problem(instance, spec.problem_class, spec.objective)
            oracle = brute_force(problem)
    return instance, problem, oracle


def make_solver(
    spec: RunSpec,
    problem: ConstrainedProblem,
    oracle: OracleResult,
    method: Optional[str] = None,
) -> InConstraintSolver:
    return InConstraintSolver(
        problem,
        algorithm=spec.algorithm,
        method=method or spec.method,
        pic_bound=spec.pic_bound,
        penalty_lambda=spec.penalty_lambda,
        qaoa_depth=spec.qaoa_depth,
        twolocal_reps=spec.twolocal_reps,
        qaoa_phase=spec.qaoa_phase,
        shots=spec.shots,
        sample_seed=spec.param_seed,
        optimizer_config=OptimizerConfig(
            max_evals=spec.max_evals,
            rho_begin=spec.rho_begin,
            rho_end=spec.rho_end,
            seed=spec.param_seed,
        ),
        oracle=oracle,
    )


def run_single(spec: RunSpec, monitor=None) -> RunResult:
    """
    Build the instance, optimize with the spec's method and collect the final metrics

    Args:
        spec: The run spec
        monitor: Optional callback receiving each EvaluationRecord as it is logged

    Returns:
        RunResult
    """
    start_time = time.time()
    instance, problem, oracle = build_instance(spec)
    solver = make_solver(spec, problem, oracle)
    trace, final = solver.solve(monitor=monitor)
    elapsed = time.time() - start_time

    ratio = final.approximation_ratio
    logger.info(
        f"{problem.label} {spec.algorithm}/{spec.method}: rho={ratio if ratio is None else round(ratio, 4)}, "
        f"P_IC={final.in_constraint_probability:.4f}, {len(trace.records)} evaluations in {elapsed:.2f}s"
    )
    return RunResult(
        spec=spec,
        instance=instance,
        problem=problem,
        oracle=oracle,
        trace=trace,
        final=final,
        lambda_used=solver.landscape.penalty_lambda,
        shots_mode="exact" if spec.shots is None else "sampled",
        wall_time=elapsed,
    )


# GRID SEARCH

def grid_axes(grid_gamma: int, grid_beta: int) -> Tuple[np.ndarray, np.ndarray]:
    """gamma over [0, 2pi) and beta over [0, pi), endpoints excluded"""
    if grid_gamma < 1 or grid_beta < 1:
        raise ParameterError(f"Grid must be at least 1x1, got {grid_gamma}x{grid_beta}")
    gammas = 2 * math.pi * np.arange(grid_gamma) / grid_gamma
    betas = math.pi * np.arange(grid_beta) / grid_beta
    return gammas, betas


def _check_grid_spec(spec: RunSpec):
    if spec.algorithm != "qaoa" or spec.qaoa_depth != 1:
        raise ParameterError("Grid search needs algorithm=qaoa with qaoa_depth=1")


def _grid_point(solver: InConstraintSolver, gamma: float, beta: float) -> GridPoint:
    record = solver.evaluate([gamma, beta])
    return GridPoint(
        gamma=float(gamma),
        beta=float(beta),
        in_constraint_probability=record.in_constraint_probability,
        approximation_ratio=record.approximation_ratio,
    )


def grid_search_qaoa_p1(spec: RunSpec, grid_gamma: int = GRID_GAMMA, grid_beta: int = GRID_BETA) -> List[GridPoint]:
    """Exact P_IC and approximation ratio of the p=1 QAOA state on every lattice point"""
    _check_grid_spec(spec)
    _, problem, oracle = build_instance(spec)
    return _grid_points(make_solver(spec, problem, oracle), grid_gamma, grid_beta)


def _grid_points(solver: InConstraintSolver, grid_gamma: int, grid_beta: int) -> List[GridPoint]:
    gammas, betas = grid_axes(grid_gamma, grid_beta)
    return [_grid_point(solver, g, b) for g in gammas for b in betas]


def run_grid(
    spec: RunSpec,
    grid_gamma: int = GRID_GAMMA,
    grid_beta: int = GRID_BETA,
    with_traces: bool = False,
) -> GridResult:
    """
    Grid search plus metadata, optionally overlaid with optimizer traces

    With traces, every method is run from the same start point and its
    (P_IC, rho) path is returned per method.
    """
    _check_grid_spec(spec)
    _, problem, oracle = build_instance(spec)
    solver = make_solver(spec, problem, oracle)
    points = _grid_points(solver, grid_gamma, grid_beta)
    baseline = _grid_point(solver, 0.0, 0.0)

    traces = {}
    if with_traces:
        for method in METHODS:
            solver = make_solver(spec, problem, oracle, method=method)
            trace, _ = solver.solve()
            traces[method] = [
                TracePoint(
                    iteration=r.iteration,
                    in_constraint_probability=r.in_constraint_probability,
                    approximation_ratio=r.approximation_ratio,
                )
                for r in trace.records
            ]

    ratios = [p.approximation_ratio for p in points if p.approximation_ratio is not None]
    metadata = {
        "grid_gamma": grid_gamma,
        "grid_beta": grid_beta,
        "gamma_range": [0.0, 2 * math.pi],
        "beta_range": [0.0, math.pi],
        "endpoint_included": False,
        "baseline": baseline.model_dump(),
        "max_ratio": max(ratios) if ratios else None,
        "feasible_count": oracle.feasible_count,
    }
    logger.info(f"Grid {grid_gamma}x{grid_beta} on {problem.label}: max rho {metadata['max_ratio']}")
    return GridResult(spec=spec, points=points, metadata=metadata, traces=traces)


# SWEEP

def write_trace(path: str, trace: OptimizationTrace):
    """One EvaluationRecord per line, in evaluation order"""
    with open(path, "w", encoding="utf-8") as f:
        for record in trace.records:
            f.write(record.model_dump_json() + "\n")


def read_trace(path: str) -> List[EvaluationRecord]:
    with open(path, encoding="utf-8") as f:
        return [EvaluationRecord.model_validate_json(line) for line in f if line.strip()]


def _execute(spec_data: Dict[str, Any], out_dir: str) -> Dict[str, Any]:
    """Run one spec and write its files; failures come back as records"""
    spec = RunSpec.model_validate(spec_data)
    spec_hash = spec.spec_hash()
    result_path = os.path.join("runs", f"{spec_hash}.json")
    try:
        result = run_single(spec)
        write_trace(os.path.join(out_dir, "traces", f"{spec_hash}.jsonl"), result.trace)
        with open(os.path.join(out_dir, result_path), "w", encoding="utf-8") as f:
            f.write(result.model_dump_json(indent=2))
        return {"success": True, "spec_hash": spec_hash, "result_path": result_path, "error": None}
    except Exception as e:
        logger.error(f"Run {spec_hash} failed: {str(e)}")
        return {"success": False, "spec_hash": spec_hash, "result_path": None, "error": f"{type(e).__name__}: {e}"}


def sweep(
    specs: List[RunSpec],
    out_dir: str,
    parallelism: int = SWEEP_PARALLELISM,
    progress: bool = True,
) -> SweepOutcome:
    """
    Run every spec not already completed in out_dir

    Args:
        specs: Run specs; duplicates (same content hash) run once
        out_dir: Sweep directory, created if missing
        parallelism: Worker processes; 1 runs in-process
        progress: Show a tqdm progress bar

    Returns:
        SweepOutcome with per-status counts and the error of every failed run
    """
    os.makedirs(os.path.join(out_dir, "runs"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    db_path = os.path.join(out_dir, MANIFEST_DB_NAME)
    init_manifest(db_path)

    unique = {spec.spec_hash(): spec for spec in specs}
    done = {
        h for h in completed_hashes(db_path)
        if os.path.exists(os.path.join(out_dir, "runs", f"{h}.json"))
    }
    pending = [spec for h, spec in sorted(unique.items()) if h not in done]
    outcome = SweepOutcome(path=out_dir, total=len(unique), skipped=len(unique) - len(pending))
    logger.info(f"Sweep: {len(pending)} runs to do, {outcome.skipped} already completed")

    def handle(result: Dict[str, Any]):
        spec = unique[result["spec_hash"]]
        status = "completed" if result["success"] else "failed"
        record_run(db_path, result["spec_hash"], spec.model_dump(mode="json"), status,
                   result["result_path"], result["error"])
        if result["success"]:
            outcome.completed += 1
        else:
            outcome.failed += 1
            outcome.errors[result["spec_hash"]] = result["error"]
            logger.warning(f"Run {result['spec_hash']} recorded as failed")

    bar = tqdm(total=len(pending), desc="sweep", disable=not progress)
    if parallelism <= 1:
        for spec in pending:
            handle(_execute(spec.model_dump(mode="json"), out_dir))
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as executor:
            futures = [executor.submit(_execute, spec.model_dump(mode="json"), out_dir) for spec in pending]
            for future in as_completed(futures):
                handle(future.result())
                bar.update(1)
    bar.close()

    count = export_manifest(db_path, os.path.join(out_dir, MANIFEST_JSON_NAME))
    logger.info(
        f"Sweep finished: {outcome.completed} completed, {outcome.skipped} skipped, "
        f"{outcome.failed} failed; manifest lists {count} runs"
    )
    return outcome


# PROFILES

def load_profile(name_or_path: str) -> Dict[str, Any]:
    """Read a YAML profile by name (profiles/<name>.yaml) or by path"""
    path = name_or_path
    if not os.path.exists(path):
        path = os.path.join(PROFILE_DIR, f"{name_or_path}.yaml")
    if not os.path.exists(path):
        raise ParameterError(f"Profile '{name_or_path}' not found")
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f)


def expand_profile(profile: Dict[str, Any], base_seed: int = 0) -> List[RunSpec]:
    """
    Cross product of the profile grid

    Instance k of a setting uses instance_seed = param_seed = base_seed + k, so
    runs that differ only in method share their instance.
    """
    common = dict(profile.get("run", {}))
    specs = []
    for algorithm in ("vqe", "qaoa"):
        section = profile.get(algorithm)
        if not section:
            continue
        depths = section.get("depths", [QAOA_DEPTH]) if algorithm == "qaoa" else [QAOA_DEPTH]
        for problem_class in profile["problem_classes"]:
            for n in profile["n_vars"]:
                for depth in depths:
                    for method in profile["methods"]:
                        for k in range(section["instances"]):
                            specs.append(RunSpec(
                                problem_class=problem_class,
                                n_vars=n,
                                algorithm=algorithm,
                                qaoa_depth=depth,
                                method=method,
                                instance_seed=base_seed + k,
                                param_seed=base_seed + k,
                                **{key: value for key, value in section.items() if key not in ("instances", "depths")},
                                **common,
                            ))
    return specs


def load_specs(path: str) -> List[RunSpec]:
    """Spec list from a JSON array of RunSpec objects or from a YAML profile"""
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as f:
            return [RunSpec.model_validate(item) for item in json.load(f)]
    return expand_profile(load_profile(path))
