import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dissent.game import (
    SimMatrix,
    agent_utility,
    confidence_weights,
    cooperative_score,
    optimal_weights,
    protocol_equivalence_check,
    regularized_objective,
    similarity,
    softmax_weights,
    total_utility,
)
from dissent.model import HyperParams

ZERO = HyperParams(lambda_collab=0.0, gamma_sys=0.0)
DEFAULT = HyperParams()

unit_vectors = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=7)


def random_sim(rng, n):
    a = rng.uniform(0, 1, (n, n))
    s = (a + a.T) / 2
    np.fill_diagonal(s, 1.0)
    return SimMatrix(s)


class TestSoftmaxWeights:
    def test_symmetric(self):
        assert softmax_weights([0.2, 0.2, 0.2], 1.5).weights == pytest.approx((1 / 3,) * 3)

    def test_beta_zero_uniform(self):
        assert softmax_weights([0.1, 0.9], 0.0).weights == (0.5, 0.5)

    def test_hand_example(self):
        raw = [math.exp(-0.3), math.exp(-0.75), math.exp(-1.2)]
        oracle = [v / sum(raw) for v in raw]
        w = softmax_weights([0.2, 0.5, 0.8], 1.5).weights
        assert w == pytest.approx(oracle, abs=1e-12)
        assert w == pytest.approx((0.48917, 0.31193, 0.19890), abs=1e-4)

    def test_ids(self):
        assert softmax_weights([0.1, 0.2], 1.0, agent_ids=["x", "y"]).agent_ids == ("x", "y")
        with pytest.raises(ValueError):
            softmax_weights([0.1, 0.2], 1.0, agent_ids=["x"])

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            softmax_weights([0.1], -1.0)

    @given(unit_vectors, st.floats(0.0, 5.0))
    def test_properties(self, u, beta):
        w = softmax_weights(u, beta).as_array()
        assert math.isclose(w.sum(), 1.0, abs_tol=1e-9)
        assert np.all(w > 0)
        # order reversal: lower uncertainty never gets less weight
        for i in range(len(u)):
            for j in range(len(u)):
                if u[i] < u[j]:
                    assert w[i] >= w[j]

    def test_confidence_weights(self):
        w = confidence_weights([0.9, 0.1], 2.0).weights
        assert w[0] == pytest.approx(1 / (1 + math.exp(-1.6)))


class TestSimilarity:
    def test_identity_and_disjoint(self):
        assert similarity("red car", "red car") == 1.0
        assert similarity("red car", "blue truck") == 0.0

    def test_stopwords_removed(self):
        assert similarity("the red car", "a red car") == 1.0

    def test_partial(self):
        assert similarity("red car", "red truck") == pytest.approx(1 / 3)

    def test_matrix_concurrent_equals_serial(self):
        texts = ["red car", "blue car", "a red truck", "the sign"]
        serial = SimMatrix.from_texts(texts)
        parallel = SimMatrix.from_texts(texts, max_workers=4)
        assert np.array_equal(serial.values, parallel.values)

    @pytest.mark.parametrize("bad", [[[1, 0.2], [0.3, 1]], [[0.9, 0], [0, 1]], [[1, 2], [2, 1]], [[1, 0, 0]]])
    def test_matrix_validation(self, bad):
        with pytest.raises(ValueError):
            SimMatrix(np.array(bad, dtype=float))


class TestUtilities:
    sim2 = SimMatrix(np.array([[1.0, 0.8], [0.8, 1.0]]))

    def test_reduced_form(self):
        assert agent_utility(0, self.sim2, [0.2, 0.4], [0.5, 0.5], ZERO) == pytest.approx(0.4)

    def test_three_terms(self):
        oracle = 0.5 * 0.8 + 0.3 * 0.5 * 0.8 - 0.2 * 0.3
        assert oracle == pytest.approx(0.46)
        assert agent_utility(0, self.sim2, [0.2, 0.4], [0.5, 0.5], DEFAULT) == pytest.approx(0.46, abs=1e-12)

    def test_symmetric_agents(self):
        sim = SimMatrix(np.ones((2, 2)))
        a = agent_utility(0, sim, [0.3, 0.3], [0.5, 0.5], DEFAULT)
        assert a == agent_utility(1, sim, [0.3, 0.3], [0.5, 0.5], DEFAULT)

    def test_total_reduced(self):
        assert total_utility(self.sim2, [0.2, 0.4], [0.5, 0.5], ZERO) == pytest.approx(0.7)

    def test_total_equals_sum(self):
        direct = sum(agent_utility(i, self.sim2, [0.2, 0.4], [0.5, 0.5], DEFAULT) for i in range(2))
        assert total_utility(self.sim2, [0.2, 0.4], [0.5, 0.5], DEFAULT) == pytest.approx(direct, abs=1e-12)

    def test_maximal_uncertainty(self):
        params = HyperParams(lambda_collab=0.0, gamma_sys=0.2)
        sim = SimMatrix(np.eye(3))
        assert total_utility(sim, [1, 1, 1], [0.2, 0.3, 0.5], params) == pytest.approx(-0.6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            total_utility(self.sim2, [0.2, 0.4, 0.1], [0.5, 0.5], DEFAULT)
        with pytest.raises(ValueError):
            agent_utility(0, self.sim2, [0.2, 0.4], [1.0], DEFAULT)

    @given(st.integers(2, 6), st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1))
    def test_algebra_property(self, n, seed, lam, gam):
        rng = np.random.default_rng(seed)
        sim = random_sim(rng, n)
        u = rng.uniform(0, 1, n)
        w = rng.dirichlet(np.ones(n))
        params = HyperParams(lambda_collab=lam, gamma_sys=gam)
        direct = math.fsum(agent_utility(i, sim, u, w, params) for i in range(n))
        assert total_utility(sim, u, w, params) == pytest.approx(direct, abs=1e-9)


class TestScores:
    def test_reduced_form(self):
        sim = SimMatrix(np.eye(3))
        assert cooperative_score(1, sim, [0.2, 0.5, 0.8], ZERO) == pytest.approx(-0.5)

    def test_hand_example(self):
        sim = SimMatrix(np.array([[1.0, 0.8, 0.6], [0.8, 1.0, 0.5], [0.6, 0.5, 1.0]]))
        assert cooperative_score(0, sim, [0.2, 0.5, 0.8], DEFAULT) == pytest.approx(0.1, abs=1e-12)

    def test_symmetric(self):
        sim = SimMatrix(np.array([[1.0, 0.4, 0.4], [0.4, 1.0, 0.4], [0.4, 0.4, 1.0]]))
        u = [0.3, 0.3, 0.9]
        assert cooperative_score(0, sim, u, DEFAULT) == cooperative_score(1, sim, u, DEFAULT)

    def test_scores_are_gradient_of_total(self):
        # total utility is affine in w over the simplex, with coefficients Score_k
        rng = np.random.default_rng(7)
        sim = random_sim(rng, 4)
        u = rng.uniform(0, 1, 4)
        offset = total_utility(sim, u, [1, 0, 0, 0], DEFAULT) - cooperative_score(0, sim, u, DEFAULT)
        for k in range(4):
            e = np.eye(4)[k]
            assert total_utility(sim, u, e, DEFAULT) == pytest.approx(cooperative_score(k, sim, u, DEFAULT) + offset)


class TestOptimum:
    def test_equal_scores_uniform(self):
        assert optimal_weights([0.3, 0.3, 0.3], 2.0).weights == pytest.approx((1 / 3,) * 3)

    def test_single(self):
        assert optimal_weights([0.7], 1.0).weights == (1.0,)

    def test_hand_example(self):
        a, b = math.exp(0.2), math.exp(-0.4)
        w = optimal_weights([0.1, -0.2], 2.0).weights
        assert w == pytest.approx((a / (a + b), b / (a + b)), abs=1e-12)
        assert w == pytest.approx((0.64566, 0.35434), abs=1e-4)

    def test_eta_positive(self):
        with pytest.raises(ValueError):
            optimal_weights([0.1], 0.0)

    def test_objective_uniform(self):
        assert regularized_objective([0.25] * 4, [0.3] * 4, 2.0) == pytest.approx(0.3 + math.log(4) / 2)

    def test_objective_point_mass(self):
        assert regularized_objective([0.0, 1.0, 0.0], [0.5, -0.1, 0.9], 1.0) == pytest.approx(-0.1)

    @given(st.lists(st.floats(-2, 2), min_size=2, max_size=5), st.floats(0.1, 5), st.integers(0, 1000))
    def test_analytic_beats_random_points(self, scores, eta, seed):
        best = regularized_objective(optimal_weights(scores, eta), scores, eta)
        rng = np.random.default_rng(seed)
        for w in rng.dirichlet(np.ones(len(scores)), size=20):
            assert regularized_objective(w, scores, eta) <= best + 1e-9


class TestProtocolEquivalence:
    def test_example(self):
        assert protocol_equivalence_check([0.2, 0.5, 0.8], 1.5)

    def test_tiny_beta(self):
        assert protocol_equivalence_check([0.2, 0.5, 0.8], 1e-9)

    def test_zero_beta_rejected(self):
        with pytest.raises(ValueError):
            protocol_equivalence_check([0.2], 0.0)

    def test_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            beta = float(rng.uniform(1e-6, 5))
            assert protocol_equivalence_check(rng.uniform(0, 1, n), beta)
