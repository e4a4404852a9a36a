# Seeded instance generators for the five problem classes and the brute-force oracle
import itertools
import logging
from typing import Any, Dict, List, Literal, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import (
    PARTITION_OBJECTIVE,
    PORTFOLIO_DRIFT_SCALE,
    PORTFOLIO_HORIZON,
    PORTFOLIO_RISK,
    PORTFOLIO_VOLATILITY,
    REGULAR_DEGREE,
    REGULAR_MAX_TRIES,
    WEIGHT_MEAN,
    WEIGHT_STD,
)
from .errors import InfeasibleInstanceError, ParameterError, SizeError
from .problem import ConstrainedProblem, ConstraintSpec, build_landscape
from .simulator.config import MAX_QUBITS

logger = logging.getLogger(__name__)

ProblemClass = Literal["max_clique", "min_vertex_cover", "max_bisection", "graph_partition", "portfolio"]
PROBLEM_CLASSES = ("max_clique", "min_vertex_cover", "max_bisection", "graph_partition", "portfolio")
GRAPH_CLASSES = PROBLEM_CLASSES[:4]


class GraphInstance(BaseModel):
    """Undirected weighted graph plus the generator call that produced it"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["graph"] = "graph"
    generator: str
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int
    n_vertices: int
    edges: Tuple[Tuple[int, int], ...]
    vertex_weights: Tuple[float, ...]
    edge_weights: Tuple[float, ...]

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_vertices))
        for (i, j), w in zip(self.edges, self.edge_weights):
            graph.add_edge(i, j, weight=w)
        return graph


class PortfolioInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["portfolio"] = "portfolio"
    generator: str = "mock_random_walk"
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int
    n_assets: int
    mu: Tuple[float, ...]
    sigma: Tuple[Tuple[float, ...], ...]
    q: float
    budget: int


Instance = Union[GraphInstance, PortfolioInstance]


class OracleResult(BaseModel):
    """Exhaustive ground truth over the feasible set, in the problem's stated sense"""

    f_max: float
    f_min: float
    optimal_states: List[int]
    feasible_count: int
    sense: Literal["minimize", "maximize"] = "minimize"

    def canonical_bounds(self) -> Tuple[float, float]:
        """(best, worst) feasible values in the canonical minimization form"""
        if self.sense == "maximize":
            return -self.f_max, -self.f_min
        return self.f_min, self.f_max


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_weights(count: int, seed: int) -> np.ndarray:
    """count i.i.d. Normal(1, 1e-4) draws"""
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    return _rng(seed).normal(WEIGHT_MEAN, WEIGHT_STD, size=count)


def _graph(generator: str, params: Dict[str, Any], seed: int, n: int, edges) -> GraphInstance:
    edges = tuple(sorted((min(i, j), max(i, j)) for i, j in edges))
    # Vertex weights first, then one weight per edge, from a single stream
    weights = sample_weights(n + len(edges), seed)
    return GraphInstance(
        generator=generator,
        params=params,
        seed=seed,
        n_vertices=n,
        edges=edges,
        vertex_weights=tuple(float(w) for w in weights[:n]),
        edge_weights=tuple(float(w) for w in weights[n:]),
    )


def gen_gnm(n: int, seed: int) -> GraphInstance:
    """
    G(n, m) graph with m = round(n(n-1)/4), half the edges of K_n

    Python's round() sends ties to even, so n=6 gives round(7.5) = 8 edges.
    """
    if n < 2:
        raise ParameterError(f"G(n, m) needs n >= 2, got {n}")
    m = round(n * (n - 1) / 4)
    pairs = list(itertools.combinations(range(n), 2))
    chosen = _rng(seed).choice(len(pairs), size=m, replace=False)
    return _graph("gnm", {"n": n, "m": m}, seed, n, [pairs[k] for k in sorted(chosen)])


def gen_regular(n: int, degree: int, seed: int) -> GraphInstance:
    """Random degree-regular graph from the pairing model, rejecting loops and multi-edges"""
    if n * degree % 2 or not 0 <= degree < n:
        raise ParameterError(f"No simple {degree}-regular graph on {n} vertices")
    rng = _rng(seed)
    points = np.repeat(np.arange(n), degree)
    for attempt in range(REGULAR_MAX_TRIES):
        paired = rng.permutation(points).reshape(-1, 2)
        edges = {(int(min(a, b)), int(max(a, b))) for a, b in paired}
        if len(edges) == len(paired) and all(a != b for a, b in edges):
            logger.debug(f"{degree}-regular graph on {n} vertices after {attempt + 1} pairings")
            return _graph("regular", {"n": n, "degree": degree}, seed, n, edges)
    raise ParameterError(f"Pairing model failed {REGULAR_MAX_TRIES} times for n={n}, degree={degree}")


def gen_planted_partition(n: int, seed: int) -> GraphInstance:
    """Two n/2-cliques; each cross pair joined independently with probability 2/n"""
    if n % 2 or n < 4:
        raise ParameterError(f"Planted partition needs an even n >= 4, got {n}")
    half = n // 2
    left, right = range(half), range(half, n)
    edges = list(itertools.combinations(left, 2)) + list(itertools.combinations(right, 2))
    coin = _rng(seed).random(half * half)
    cross = list(itertools.product(left, right))
    edges += [pair for pair, u in zip(cross, coin) if u < 2 / n]
    return _graph("planted_partition", {"n": n, "p_in": 1.0, "p_out": 2 / n}, seed, n, edges)


def gen_portfolio(n: int, seed: int) -> PortfolioInstance:
    """
    Mock market data: n correlated random-walk price series over PORTFOLIO_HORIZON steps

    mu is the mean per-step return, sigma the sample covariance of the returns.
    """
    if n % 2 or n < 2:
        raise ParameterError(f"Portfolio generator needs an even n >= 2, got {n}")
    rng = _rng(seed)
    drift = rng.normal(0.0, PORTFOLIO_DRIFT_SCALE, size=n)
    loadings = rng.normal(size=(n, n))
    loadings /= np.linalg.norm(loadings, axis=1, keepdims=True)
    shocks = rng.normal(size=(PORTFOLIO_HORIZON, n))
    step_returns = drift + PORTFOLIO_VOLATILITY * shocks @ loadings.T

    prices = 100.0 * np.cumprod(np.vstack([np.ones(n), 1.0 + step_returns]), axis=0)
    returns = prices[1:] / prices[:-1] - 1.0
    mu = returns.mean(axis=0)
    sigma = np.cov(returns, rowvar=False)
    sigma = (sigma + sigma.T) / 2
    return PortfolioInstance(
        params={"n": n, "horizon": PORTFOLIO_HORIZON, "volatility": PORTFOLIO_VOLATILITY},
        seed=seed,
        n_assets=n,
        mu=tuple(float(v) for v in mu),
        sigma=tuple(tuple(float(v) for v in row) for row in sigma),
        q=PORTFOLIO_RISK,
        budget=n // 2,
    )


def generate_instance(problem_class: str, n: int, seed: int) -> Instance:
    """The generator each problem class uses in the benchmark"""
    if problem_class in ("max_clique", "min_vertex_cover"):
        return gen_gnm(n, seed)
    if problem_class == "max_bisection":
        return gen_regular(n, REGULAR_DEGREE, seed)
    if problem_class == "graph_partition":
        return gen_planted_partition(n, seed)
    if problem_class == "portfolio":
        return gen_portfolio(n, seed)
    raise ParameterError(f"Unknown problem class '{problem_class}'")


def _partition_terms(instance: GraphInstance, objective: str):
    linear = np.zeros(instance.n_vertices)
    quadratic = []
    for (i, j), w in zip(instance.edges, instance.edge_weights):
        if objective == "cut":
            # w * (x_i + x_j - 2 x_i x_j) counts edges across the split
            linear[i] += w
            linear[j] += w
            quadratic.append((i, j, -2.0 * w))
        elif objective == "same_side":
            quadratic.append((i, j, w))
        else:
            raise ParameterError(f"objective must be 'cut' or 'same_side', got '{objective}'")
    return tuple(float(v) for v in linear), tuple(quadratic)


def to_problem(instance: Instance, problem_class: str, objective: str = PARTITION_OBJECTIVE) -> ConstrainedProblem:
    """
    Formulate an instance as one of the five constrained problems

    Args:
        instance: Graph or portfolio instance
        problem_class: max_clique, min_vertex_cover, max_bisection, graph_partition or portfolio
        objective: cut or same_side, only read by the two partition problems

    Returns:
        ConstrainedProblem
    """
    if problem_class == "portfolio":
        if not isinstance(instance, PortfolioInstance):
            raise ParameterError("portfolio needs a PortfolioInstance")
        n = instance.n_assets
        sigma = np.array(instance.sigma)
        # x^T S x over binaries: S_ii x_i + 2 S_ij x_i x_j for i < j
        quadratic = tuple(
            (i, j, float(instance.q * sigma[i, j] * (1 if i == j else 2)))
            for i in range(n)
            for j in range(i, n)
        )
        return ConstrainedProblem(
            n_vars=n,
            sense="minimize",
            linear=tuple(-m for m in instance.mu),
            quadratic=quadratic,
            constraints=(ConstraintSpec(kind="cardinality_eq", vars=tuple(range(n)), bound=instance.budget),),
            label=f"portfolio_n{n}_s{instance.seed}",
        )

    if problem_class not in GRAPH_CLASSES:
        raise ParameterError(f"Unknown problem class '{problem_class}'")
    if not isinstance(instance, GraphInstance):
        raise ParameterError(f"{problem_class} needs a GraphInstance")
    n = instance.n_vertices
    label = f"{problem_class}_n{n}_s{instance.seed}"

    if problem_class == "max_clique":
        non_edges = sorted(tuple(sorted(e)) for e in nx.non_edges(instance.to_networkx()))
        return ConstrainedProblem(
            n_vars=n,
            sense="maximize",
            linear=instance.vertex_weights,
            constraints=tuple(ConstraintSpec(kind="pair_at_most_one", vars=e) for e in non_edges),
            label=label,
        )
    if problem_class == "min_vertex_cover":
        return ConstrainedProblem(
            n_vars=n,
            sense="minimize",
            linear=instance.vertex_weights,
            constraints=tuple(ConstraintSpec(kind="pair_at_least_one", vars=e) for e in instance.edges),
            label=label,
        )

    if n % 2:
        raise ParameterError(f"{problem_class} needs an even vertex count, got {n}")
    linear, quadratic = _partition_terms(instance, objective)
    return ConstrainedProblem(
        n_vars=n,
        sense="maximize" if problem_class == "max_bisection" else "minimize",
        linear=linear,
        quadratic=quadratic,
        constraints=(ConstraintSpec(kind="cardinality_eq", vars=tuple(range(n)), bound=n // 2),),
        label=label,
    )


def brute_force(problem: ConstrainedProblem) -> OracleResult:
    """Enumerate all 2^n states for f_max, f_min, the optimal states and the feasible count"""
    if problem.n_vars > MAX_QUBITS:
        raise SizeError(f"Cannot enumerate {problem.n_vars} variables (max {MAX_QUBITS})")
    landscape = build_landscape(problem, 0.0)
    mask = landscape.feasible_mask
    feasible_count = int(np.count_nonzero(mask))
    if feasible_count == 0:
        raise InfeasibleInstanceError(f"Problem '{problem.label}' has no feasible state")

    values = landscape.objective_diag[mask]
    best, worst = float(values.min()), float(values.max())
    tol = 1e-12 * max(1.0, abs(best))
    optimal = np.flatnonzero(mask & (np.abs(landscape.objective_diag - best) <= tol))

    # Back to the stated sense
    f_min, f_max = (best, worst) if problem.sense == "minimize" else (-worst, -best)
    return OracleResult(
        f_max=f_max,
        f_min=f_min,
        optimal_states=[int(s) for s in optimal],
        feasible_count=feasible_count,
        sense=problem.sense,
    )
