"""Unit tests for the likelihood models and their brute-force reference."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlearn.errors import DimensionMismatch, TooManyQubits
from hamlearn.models import (
    CLE,
    FULL_BASIS,
    IQLE,
    LIKELIHOOD_FLOOR,
    QLE,
    TWO_OUTCOME,
    ExperimentSpec,
    InteractionGraph,
    IsingModel,
    SingleParameterModel,
    bitflip_wrap,
    dense_oracle_distribution,
    fwht,
    ising_energy,
    ising_outcome_distribution,
    noisy_likelihood,
    single_param_likelihood,
)


class TestInteractionGraph:
    def test_complete_edge_count(self):
        for n in (2, 3, 5, 8):
            assert InteractionGraph.complete(n).dimension == n * (n - 1) // 2

    def test_line_edge_count(self):
        for n in (2, 3, 5, 8):
            assert InteractionGraph.line(n).dimension == n - 1

    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError):
            InteractionGraph(3, ((1, 0),))  # unordered
        with pytest.raises(ValueError):
            InteractionGraph(3, ((0, 3),))  # out of range
        with pytest.raises(ValueError):
            InteractionGraph(3, ((0, 1), (0, 1)))  # duplicate
        with pytest.raises(ValueError):
            InteractionGraph(3, ())  # empty


class TestExperimentSpec:
    def test_iqle_requires_inversion(self):
        with pytest.raises(ValueError):
            ExperimentSpec(IQLE, 1.0)

    def test_cle_forbids_inversion(self):
        with pytest.raises(ValueError):
            ExperimentSpec(CLE, 1.0, [0.1])

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            ExperimentSpec(QLE, -1.0)


class TestSingleParamLikelihood:
    def test_perfect_echo(self):
        assert single_param_likelihood(0, 0.3, 0.3, 17.0) == 1.0

    def test_quarter_turn(self):
        # 2 (x - x_inv) t = pi / 2 makes both outcomes equally likely
        assert single_param_likelihood(0, 0.5, 0.0, math.pi / 2) == pytest.approx(0.5)

    def test_direct_evaluation(self):
        assert single_param_likelihood(1, 0.25, 0.0, math.pi) == pytest.approx(0.5)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 50))
    @settings(max_examples=50, deadline=None)
    def test_outcomes_sum_to_one(self, x, x_inv, t):
        total = single_param_likelihood(0, x, x_inv, t) + single_param_likelihood(1, x, x_inv, t)
        assert total == pytest.approx(1.0, abs=1e-15)


class TestIsingEnergy:
    def test_all_up_sums_couplings(self):
        graph = InteractionGraph.complete(4)
        x = np.arange(1.0, 7.0)
        assert ising_energy(graph, x, "0000") == pytest.approx(x.sum())

    def test_opposite_spins_single_edge(self):
        graph = InteractionGraph(2, ((0, 1),))
        assert ising_energy(graph, [0.5], "01") == pytest.approx(-0.5)

    def test_matches_dense_diagonal(self):
        from hamlearn.models import _dense_energy_diagonal

        rng = np.random.default_rng(0)
        graph = InteractionGraph.complete(4)
        x = rng.uniform(-0.5, 0.5, graph.dimension)
        diagonal = _dense_energy_diagonal(graph, x)
        for z in range(16):
            assert ising_energy(graph, x, z) == pytest.approx(diagonal[z], abs=1e-12)

    def test_string_and_int_agree(self):
        graph = InteractionGraph.line(3)
        x = [0.2, -0.4]
        # "011" -> qubit0=0, qubit1=1, qubit2=1 -> int with bit k = qubit k
        assert ising_energy(graph, x, "011") == ising_energy(graph, x, 0b110)


class TestFwht:
    def test_two_point(self):
        np.testing.assert_allclose(fwht([3.0, 1.0]), [4.0, 2.0])

    def test_matches_character_sum(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        direct = np.array(
            [
                sum(v[z] * (-1) ** bin(d & z).count("1") for z in range(8))
                for d in range(8)
            ]
        )
        np.testing.assert_allclose(fwht(v), direct, atol=1e-12)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            fwht([1.0, 2.0, 3.0])


class TestIsingModel:
    def test_perfect_echo(self):
        rng = np.random.default_rng(2)
        graph = InteractionGraph.complete(4)
        model = IsingModel(graph)
        x = rng.uniform(-0.5, 0.5, graph.dimension)
        for t in (0.3, 4.0, 250.0):
            dist = model.outcome_distribution(x, ExperimentSpec(IQLE, t, x, FULL_BASIS))
            assert dist[0] == pytest.approx(1.0, abs=1e-12)
            assert np.max(dist[1:]) < 1e-12

    def test_no_evolution(self):
        graph = InteractionGraph.line(3)
        model = IsingModel(graph)
        dist = model.outcome_distribution([0.4, -0.2], ExperimentSpec(QLE, 0.0))
        assert dist[0] == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(3)
        graph = InteractionGraph.complete(3)
        model = IsingModel(graph)
        for _ in range(20):
            x = rng.uniform(-0.5, 0.5, 3)
            inversion = rng.uniform(-0.5, 0.5, 3)
            t = rng.uniform(0.01, 100.0)
            spec = ExperimentSpec(IQLE, t, inversion, FULL_BASIS)
            np.testing.assert_allclose(
                model.outcome_distribution(x, spec),
                dense_oracle_distribution(graph, x, spec),
                atol=1e-9,
            )

    def test_distribution_normalized_all_kinds(self):
        rng = np.random.default_rng(4)
        graph = InteractionGraph.line(5)
        model = IsingModel(graph)
        x = rng.uniform(-0.5, 0.5, graph.dimension)
        inversion = rng.uniform(-0.5, 0.5, graph.dimension)
        for kind, inv in ((CLE, None), (QLE, None), (IQLE, inversion)):
            for measurement in (FULL_BASIS, TWO_OUTCOME):
                spec = ExperimentSpec(kind, 7.7, inv, measurement)
                dist = model.outcome_distribution(x, spec)
                assert abs(dist.sum() - 1.0) < 1e-10
                assert np.all(dist >= 0)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(5)
        graph = InteractionGraph.complete(3)
        model = IsingModel(graph)
        xs = rng.uniform(-0.5, 0.5, (30, 3))
        spec = ExperimentSpec(IQLE, 11.0, rng.uniform(-0.5, 0.5, 3), FULL_BASIS)
        for outcome in (0, 5):
            many = model.likelihood_many(outcome, xs, spec)
            each = np.array([model.likelihood(outcome, x, spec) for x in xs])
            np.testing.assert_allclose(many, each, rtol=1e-12)

    def test_chunking_consistent(self):
        rng = np.random.default_rng(6)
        graph = InteractionGraph.line(4)
        model = IsingModel(graph)
        model_small_chunks = IsingModel(graph)
        model_small_chunks._chunk_elements = 64
        xs = rng.uniform(-0.5, 0.5, (100, graph.dimension))
        spec = ExperimentSpec(QLE, 3.0)
        np.testing.assert_array_equal(
            model.likelihood_many(2, xs, spec),
            model_small_chunks.likelihood_many(2, xs, spec),
        )

    def test_two_outcome_return_bound(self):
        # P(return) >= max(0, 1 - 2 ||H - H_inv|| t)^2 with the exact
        # operator norm, which for diagonal Hamiltonians is max |dE(z)|.
        rng = np.random.default_rng(7)
        graph = InteractionGraph.complete(4)
        model = IsingModel(graph)
        for _ in range(50):
            x = rng.uniform(-0.5, 0.5, graph.dimension)
            inversion = rng.uniform(-0.5, 0.5, graph.dimension)
            norm = np.max(np.abs(model.energies(x - inversion)))
            t = rng.uniform(0.0, 0.5) / max(norm, 1e-12)
            spec = ExperimentSpec(IQLE, t, inversion, TWO_OUTCOME)
            bound = max(0.0, 1.0 - 2.0 * norm * t) ** 2
            assert model.outcome_distribution(x, spec)[0] >= bound - 1e-12

    def test_qubit_cap(self):
        with pytest.raises(TooManyQubits):
            IsingModel(InteractionGraph.line(15))
        with pytest.raises(TooManyQubits):
            IsingModel(InteractionGraph.line(5), max_qubits=4)

    def test_wrong_dimension_rejected(self):
        model = IsingModel(InteractionGraph.line(3))
        with pytest.raises(DimensionMismatch):
            model.outcome_distribution([0.1, 0.2, 0.3], ExperimentSpec(QLE, 1.0))


class TestDenseOracle:
    def test_zero_coupling_concentrates(self):
        graph = InteractionGraph(2, ((0, 1),))
        dist = dense_oracle_distribution(graph, [0.0], ExperimentSpec(QLE, 5.0))
        assert dist[0] == pytest.approx(1.0, abs=1e-12)

    def test_two_qubit_cosine_family(self):
        # For one edge the X-basis distribution is
        # [cos^2(xt), 0, 0, sin^2(xt)]: parity of the outcome string is
        # conserved, and the return probability is (1 + cos 2xt) / 2.
        graph = InteractionGraph(2, ((0, 1),))
        x, t = 0.5, math.pi
        dist = dense_oracle_distribution(graph, [x], ExperimentSpec(CLE, t))
        expected0 = 0.5 * (1 + math.cos(2 * x * t))
        assert dist[0] == pytest.approx(expected0, abs=1e-12)
        assert dist[1] == pytest.approx(0.0, abs=1e-12)
        assert dist[2] == pytest.approx(0.0, abs=1e-12)
        assert dist[3] == pytest.approx(1 - expected0, abs=1e-12)

    def test_standalone_distribution_helper(self):
        graph = InteractionGraph.line(3)
        x = [0.3, -0.1]
        spec = ExperimentSpec(QLE, 4.2)
        np.testing.assert_array_equal(
            ising_outcome_distribution(graph, x, spec),
            IsingModel(graph).outcome_distribution(x, spec),
        )

    def test_line_vs_fast_path(self):
        rng = np.random.default_rng(8)
        graph = InteractionGraph.line(3)
        model = IsingModel(graph)
        for _ in range(20):
            x = rng.uniform(-0.5, 0.5, 2)
            spec = ExperimentSpec(IQLE, rng.uniform(0.1, 60.0), rng.uniform(-0.5, 0.5, 2))
            np.testing.assert_allclose(
                dense_oracle_distribution(graph, x, spec),
                model.outcome_distribution(x, spec),
                atol=1e-9,
            )

    def test_qubit_cap(self):
        with pytest.raises(TooManyQubits):
            dense_oracle_distribution(
                InteractionGraph.line(7), np.zeros(6), ExperimentSpec(QLE, 1.0)
            )


class TestCrossModelConsistency:
    def test_single_param_equals_two_qubit_pair(self):
        rng = np.random.default_rng(9)
        pair = IsingModel(InteractionGraph(2, ((0, 1),)))
        single = SingleParameterModel()
        for _ in range(50):
            x, x_inv = rng.uniform(-0.5, 0.5, 2)
            spec = ExperimentSpec(IQLE, rng.uniform(0.01, 50.0), [x_inv], TWO_OUTCOME)
            for outcome in (0, 1):
                assert pair.likelihood(outcome, [x], spec) == pytest.approx(
                    single.likelihood(outcome, [x], spec), abs=1e-12
                )


class TestBitflipWrap:
    def test_identity_at_zero(self):
        assert bitflip_wrap(0.0, 0.37) == 0.37

    def test_full_depolarization(self):
        assert bitflip_wrap(0.5, 0.9) == pytest.approx(0.5)
        assert bitflip_wrap(0.5, 0.1) == pytest.approx(0.5)

    def test_arithmetic(self):
        assert bitflip_wrap(0.1, 0.9) == pytest.approx(0.82)

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            bitflip_wrap(0.6, 0.5)

    @given(st.floats(0, 0.5), st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_preserves_two_outcome_normalization(self, alpha, p):
        assert bitflip_wrap(alpha, p) + bitflip_wrap(alpha, 1 - p) == pytest.approx(1.0)

    @given(st.floats(0, 0.5), st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_range(self, alpha, p):
        wrapped = bitflip_wrap(alpha, p)
        assert alpha - 1e-12 <= wrapped <= 1 - alpha + 1e-12


class TestNoisyLikelihood:
    def test_zero_noise_identity(self):
        rng = np.random.default_rng(10)
        assert noisy_likelihood(0.37, 0.0, rng) == 0.37

    def test_center_unbiased(self):
        # With p = 0.5 clipping is negligible: the sample mean of 1e6 draws
        # must land within 5 standard errors of p.
        rng = np.random.default_rng(11)
        draws = noisy_likelihood(np.full(1_000_000, 0.5), 0.1, rng)
        assert abs(draws.mean() - 0.5) < 5e-4

    def test_clipping_at_one(self):
        rng = np.random.default_rng(12)
        draws = noisy_likelihood(np.ones(10_000), 0.1, rng)
        assert np.all(draws <= 1.0)
        assert np.all(draws >= LIKELIHOOD_FLOOR)
