import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constrained_vqa.errors import DegenerateInstanceError, EmptyFeasibleSupportError, SizeError
from constrained_vqa.instances import PROBLEM_CLASSES, OracleResult, brute_force, generate_instance, to_problem
from constrained_vqa.metrics import (
    approximation_ratio,
    evaluate_state,
    in_constraint_energy,
    in_constraint_probability,
    is_optimum_modal,
    optimal_mass_fraction,
    sample_counts,
    sample_metrics,
)
from constrained_vqa.problem import bits_of, build_landscape, evaluate_objective, is_feasible, to_original_sense
from constrained_vqa.simulator.statevector import StateVector, expectation_diagonal, init_plus


def basis(n, s):
    amps = np.zeros(1 << n, dtype=complex)
    amps[s] = 1
    return StateVector(n, amps)


def uniform_over(n, states):
    amps = np.zeros(1 << n, dtype=complex)
    amps[list(states)] = 1
    return StateVector.from_amplitudes(amps, normalize=True)


def random_state(n, seed):
    gen = np.random.Generator(np.random.PCG64(seed))
    amps = gen.normal(size=1 << n) + 1j * gen.normal(size=1 << n)
    return StateVector.from_amplitudes(amps, normalize=True)


class TestInConstraintProbability:
    def test_uniform(self):
        mask = np.array([1, 0, 1, 1, 0, 0, 0, 1], dtype=bool)
        assert in_constraint_probability(init_plus(3), mask) == pytest.approx(4 / 8)

    def test_basis_state(self):
        mask = np.zeros(8, dtype=bool)
        mask[5] = True
        assert in_constraint_probability(basis(3, 5), mask) == 1.0

    def test_all_zero_mask(self):
        assert in_constraint_probability(random_state(3, 0), np.zeros(8, dtype=bool)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            in_constraint_probability(init_plus(2), [True, False])


class TestInConstraintEnergy:
    def test_fully_feasible_support(self):
        state = random_state(3, 1)
        diag = np.arange(8, dtype=float)
        mask = np.ones(8, dtype=bool)
        assert in_constraint_energy(state, diag, mask) == pytest.approx(expectation_diagonal(state, diag), abs=1e-12)

    def test_uniform_two_state_mean(self):
        mask = np.array([False, True, True, False])
        assert in_constraint_energy(init_plus(2), [5.0, 3.0, 7.0, 9.0], mask) == pytest.approx(5.0)

    def test_matches_masked_sum(self, rng):
        state = random_state(4, 2)
        diag = rng.normal(size=16)
        mask = rng.random(16) < 0.5
        probs = np.abs(state.amplitudes) ** 2
        oracle = sum(p * d for p, d, m in zip(probs, diag, mask) if m) / sum(p for p, m in zip(probs, mask) if m)
        assert in_constraint_energy(state, diag, mask) == pytest.approx(oracle, abs=1e-12)

    def test_empty_support(self):
        mask = np.array([False, True, False, False])
        with pytest.raises(EmptyFeasibleSupportError):
            in_constraint_energy(basis(2, 0), [1.0, 2.0, 3.0, 4.0], mask)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), phase=st.floats(-np.pi, np.pi))
    def test_global_phase(self, seed, phase):
        state = random_state(4, seed)
        rotated = StateVector(4, state.amplitudes * np.exp(1j * phase))
        diag = np.linspace(-2.0, 3.0, 16)
        mask = np.arange(16) % 3 != 0
        assert in_constraint_energy(rotated, diag, mask) == pytest.approx(
            in_constraint_energy(state, diag, mask), abs=1e-12
        )

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), other_seed=st.integers(0, 10_000))
    def test_infeasible_amplitudes_ignored(self, seed, other_seed):
        state = random_state(4, seed)
        mask = np.arange(16) % 3 != 0
        amps = state.amplitudes.copy()
        amps[~mask] = random_state(4, other_seed).amplitudes[~mask] * 5
        changed = StateVector.from_amplitudes(amps, normalize=True)
        diag = np.linspace(-2.0, 3.0, 16)
        assert in_constraint_energy(changed, diag, mask) == pytest.approx(
            in_constraint_energy(state, diag, mask), abs=1e-12
        )


class TestApproximationRatio:
    @pytest.fixture
    def portfolio(self):
        problem = to_problem(generate_instance("portfolio", 6, 3), "portfolio")
        return problem, build_landscape(problem), brute_force(problem)

    def test_optimum_and_worst(self, portfolio):
        problem, landscape, oracle = portfolio
        mask, objective = landscape.feasible_mask, landscape.objective_diag
        best = oracle.optimal_states[0]
        worst = int(np.flatnonzero(mask)[np.argmax(objective[mask])])
        assert approximation_ratio(basis(6, best), objective, mask, oracle) == pytest.approx(1.0)
        assert approximation_ratio(basis(6, worst), objective, mask, oracle) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_over_feasible(self, portfolio):
        problem, landscape, oracle = portfolio
        feasible = np.flatnonzero(landscape.feasible_mask)
        mean = np.mean([evaluate_objective(problem, bits_of(s, 6)) for s in feasible])
        expected = (oracle.f_max - mean) / (oracle.f_max - oracle.f_min)
        ratio = approximation_ratio(uniform_over(6, feasible), landscape.objective_diag, landscape.feasible_mask, oracle)
        assert ratio == pytest.approx(expected, abs=1e-9)

    def test_maximize_sense(self, graph_factory):
        problem = to_problem(graph_factory(3, [(0, 1), (1, 2), (0, 2)]), "max_clique")
        landscape = build_landscape(problem)
        oracle = brute_force(problem)
        assert approximation_ratio(basis(3, 7), landscape.objective_diag, landscape.feasible_mask, oracle) == pytest.approx(1.0)
        assert approximation_ratio(basis(3, 0), landscape.objective_diag, landscape.feasible_mask, oracle) == pytest.approx(0.0)

    def test_degenerate(self):
        oracle = OracleResult(f_max=1.0, f_min=1.0, optimal_states=[0, 1], feasible_count=2)
        with pytest.raises(DegenerateInstanceError):
            approximation_ratio(init_plus(1), [1.0, 1.0], [True, True], oracle)

    @pytest.mark.parametrize("problem_class", PROBLEM_CLASSES)
    @settings(max_examples=30, deadline=None)
    @given(instance_seed=st.integers(0, 10_000), state_seed=st.integers(0, 10_000))
    def test_within_unit_interval(self, problem_class, instance_seed, state_seed):
        problem = to_problem(generate_instance(problem_class, 6, instance_seed), problem_class)
        landscape = build_landscape(problem)
        ratio = approximation_ratio(
            random_state(6, state_seed), landscape.objective_diag, landscape.feasible_mask, brute_force(problem)
        )
        assert -1e-9 <= ratio <= 1 + 1e-9


class TestOptimalMass:
    def test_concentrated_on_optimum(self):
        mask = np.array([False, True, True, True])
        assert optimal_mass_fraction(basis(2, 2), mask, [2]) == 1.0
        assert is_optimum_modal(basis(2, 2), mask, [2])

    def test_uniform_over_feasible(self):
        mask = np.array([False, True, True, True])
        assert optimal_mass_fraction(uniform_over(2, [1, 2, 3]), mask, [2]) == pytest.approx(1 / 3)

    def test_matches_ratio_oracle(self):
        state = random_state(3, 3)
        mask = np.array([1, 1, 0, 1, 0, 1, 1, 0], dtype=bool)
        probs = np.abs(state.amplitudes) ** 2
        oracle = (probs[3] + probs[6]) / probs[mask].sum()
        assert optimal_mass_fraction(state, mask, [3, 6]) == pytest.approx(oracle, abs=1e-12)

    def test_empty_support(self):
        with pytest.raises(EmptyFeasibleSupportError):
            optimal_mass_fraction(basis(1, 0), [False, True], [1])


class TestModal:
    def test_non_optimal_peak(self):
        assert not is_optimum_modal(basis(2, 1), [False, True, True, True], [2])

    def test_uniform_tie_counts_as_modal(self):
        assert is_optimum_modal(uniform_over(2, [1, 2, 3]), [False, True, True, True], [3])

    def test_infeasible_peak_ignored(self):
        amps = np.sqrt([0.7, 0.1, 0.2, 0.0]).astype(complex)
        assert is_optimum_modal(StateVector(2, amps), [False, True, True, False], [2])

    def test_empty_support(self):
        with pytest.raises(EmptyFeasibleSupportError):
            is_optimum_modal(basis(1, 0), [False, True], [1])


class TestOracleEquivalence:
    """Metrics against direct loops over basis states on generated instances"""

    @pytest.mark.parametrize("problem_class", PROBLEM_CLASSES)
    @settings(max_examples=50, deadline=None)
    @given(n=st.sampled_from([4, 6, 8]), instance_seed=st.integers(0, 10_000), state_seed=st.integers(0, 10_000))
    def test_random_instances(self, problem_class, n, instance_seed, state_seed):
        problem = to_problem(generate_instance(problem_class, n, instance_seed), problem_class)
        landscape = build_landscape(problem)
        oracle = brute_force(problem)
        state = random_state(n, state_seed)

        probs = np.abs(state.amplitudes) ** 2
        feasible = [s for s in range(1 << n) if is_feasible(problem, bits_of(s, n))]
        pic = sum(probs[s] for s in feasible)
        values = {s: evaluate_objective(problem, bits_of(s, n)) for s in feasible}
        eic = sum(probs[s] * values[s] for s in feasible) / pic
        best, worst = min(values.values()), max(values.values())
        ratio = (worst - eic) / (worst - best)
        optimal = [s for s in feasible if abs(values[s] - best) <= 1e-9]
        mass = sum(probs[s] for s in optimal) / pic

        mask = landscape.feasible_mask
        assert in_constraint_probability(state, mask) == pytest.approx(pic, abs=1e-9)
        assert in_constraint_energy(state, landscape.penalized_diag, mask) == pytest.approx(eic, abs=1e-9)
        assert approximation_ratio(state, landscape.objective_diag, mask, oracle) == pytest.approx(ratio, abs=1e-9)
        assert optimal_mass_fraction(state, mask, oracle.optimal_states) == pytest.approx(mass, abs=1e-9)
        assert to_original_sense(problem, best) in (oracle.f_min, oracle.f_max)


class TestEvaluateState:
    def test_exact_record(self, one_of_two):
        landscape = build_landscape(one_of_two, 2.0)
        oracle = brute_force(one_of_two)
        record = evaluate_state(init_plus(2), landscape, oracle, iteration=4, params=[0.1])
        assert record.iteration == 4
        assert record.energy == pytest.approx(np.mean([2.0, 1.0, 0.0, 3.0]))
        assert record.in_constraint_probability == pytest.approx(0.5)
        assert record.in_constraint_energy == pytest.approx(0.5)
        assert record.approximation_ratio == pytest.approx(0.5)
        assert record.optimal_mass_fraction == pytest.approx(0.5)
        assert record.is_optimum_modal

    def test_no_support_leaves_metrics_empty(self, one_of_two):
        landscape = build_landscape(one_of_two)
        record = evaluate_state(basis(2, 0), landscape, brute_force(one_of_two))
        assert record.in_constraint_probability == 0.0
        assert record.in_constraint_energy is None
        assert record.approximation_ratio is None

    def test_sampled_record(self, one_of_two):
        landscape = build_landscape(one_of_two)
        oracle = brute_force(one_of_two)
        first = evaluate_state(init_plus(2), landscape, oracle, shots=4000, sample_seed=5)
        second = evaluate_state(init_plus(2), landscape, oracle, shots=4000, sample_seed=5)
        assert first == second
        assert first.in_constraint_probability == pytest.approx(0.5, abs=0.05)
        # Energy stays exact in sampled mode
        assert first.energy == pytest.approx(expectation_diagonal(init_plus(2), landscape.penalized_diag))

    def test_sample_counts(self):
        counts = sample_counts(init_plus(3), 1000, 1)
        assert counts.sum() == 1000
        np.testing.assert_array_equal(counts, sample_counts(init_plus(3), 1000, 1))


class TestSampleMetrics:
    def test_feasible_basis_state(self, one_of_two):
        landscape = build_landscape(one_of_two)
        metrics = sample_metrics(basis(2, 2), landscape, brute_force(one_of_two), 100, 0)
        assert metrics["in_constraint_probability"] == 1.0
        assert metrics["approximation_ratio"] == pytest.approx(1.0)
        assert metrics["optimal_mass_fraction"] == 1.0
        assert metrics["is_optimum_modal"]

    def test_no_feasible_sample(self, one_of_two):
        landscape = build_landscape(one_of_two)
        with pytest.raises(EmptyFeasibleSupportError):
            sample_metrics(basis(2, 0), landscape, brute_force(one_of_two), 50, 3)
