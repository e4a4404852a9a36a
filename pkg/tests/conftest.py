import numpy as np
import pytest

from constrained_vqa.instances import GraphInstance
from constrained_vqa.problem import ConstrainedProblem, ConstraintSpec
from constrained_vqa.simulator.statevector import StateVector


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def random_state():
    """Factory for seeded Haar-ish random states"""

    def make(n: int, seed: int = 0) -> StateVector:
        gen = np.random.Generator(np.random.PCG64(seed))
        amps = gen.normal(size=1 << n) + 1j * gen.normal(size=1 << n)
        return StateVector.from_amplitudes(amps, normalize=True)

    return make


@pytest.fixture
def one_of_two():
    """n=2, f = x_0 (minimize), exactly one variable set"""
    return ConstrainedProblem(
        n_vars=2,
        linear=(1.0, 0.0),
        constraints=(ConstraintSpec(kind="cardinality_eq", vars=(0, 1), bound=1),),
        label="one_of_two",
    )


def unit_graph(n: int, edges, vertex_weights=None) -> GraphInstance:
    """Hand-built graph instance with unit edge weights"""
    edges = tuple(sorted(tuple(sorted(e)) for e in edges))
    return GraphInstance(
        generator="manual",
        seed=0,
        n_vertices=n,
        edges=edges,
        vertex_weights=tuple(vertex_weights or [1.0] * n),
        edge_weights=tuple([1.0] * len(edges)),
    )


@pytest.fixture
def graph_factory():
    return unit_graph
