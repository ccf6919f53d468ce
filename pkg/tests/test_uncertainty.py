import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from dissent.model import AgentOutput, HyperParams, MarkerLexicon, TokenDistribution
from dissent.uncertainty import (
    EmptyGeneration,
    assess_uncertainty,
    marker_density,
    normalized_entropy,
    phi_gen_plus,
    phi_sem,
    sigmoid,
    token_entropy,
    top_gap,
)


def dist(*probs, hint=None):
    return TokenDistribution.from_probs(probs, vocab_size_hint=hint)


probability_vectors = st.lists(st.floats(0.001, 1.0), min_size=1, max_size=8).map(
    lambda raw: [v / sum(raw) for v in raw]
)


class TestEntropy:
    def test_uniform_four(self):
        assert token_entropy(dist(0.25, 0.25, 0.25, 0.25)) == pytest.approx(math.log(4), abs=1e-12)

    def test_one_hot(self):
        assert token_entropy(dist(1.0)) == 0.0

    def test_hand_sum(self):
        # -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1)
        assert token_entropy(dist(0.7, 0.2, 0.1)) == pytest.approx(0.801819, abs=1e-6)

    def test_zero_probability_terms_ignored(self):
        assert token_entropy(dist(1.0, 0.0)) == 0.0

    def test_normalized_hint_one(self):
        assert normalized_entropy(dist(1.0)) == 0.0

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_uniform_maximizes(self, n):
        rng = np.random.default_rng(n)
        bound = math.log(n)
        for _ in range(200):
            p = rng.dirichlet(np.ones(n))
            assert token_entropy(dist(*p)) <= bound + 1e-12


class TestTopGap:
    def test_examples(self):
        assert top_gap(dist(0.6, 0.3, 0.1)) == pytest.approx(0.3)
        assert top_gap(dist(0.5, 0.5)) == 0.0
        assert top_gap(dist(1.0)) == 1.0


class TestPhiGen:
    def test_uniform_two_is_one(self):
        assert phi_gen_plus([dist(0.5, 0.5)]) == 1.0

    def test_one_hot_is_zero(self):
        assert phi_gen_plus([dist(1.0)]) == 0.0

    def test_three_token_example(self):
        # 0.5 * H/ln 3 + 0.5 * (1 - 0.5), computed term by term here
        h = -(0.7 * math.log(0.7) + 0.2 * math.log(0.2) + 0.1 * math.log(0.1))
        expected = 0.5 * h / math.log(3) + 0.5 * 0.5
        assert expected == pytest.approx(0.61492335, abs=1e-8)
        assert phi_gen_plus([dist(0.7, 0.2, 0.1, hint=3)]) == pytest.approx(expected, abs=1e-12)

    def test_mean_over_positions(self):
        assert phi_gen_plus([dist(0.5, 0.5), dist(1.0), dist(1.0), dist(1.0)]) == 0.25

    def test_empty_raises(self):
        with pytest.raises(EmptyGeneration):
            phi_gen_plus([])

    def test_normalized_variant_requires_unit_sum(self):
        with pytest.raises(ValueError):
            phi_gen_plus([dist(1.0)], HyperParams(alpha_phi=0.7, beta_phi=0.7))

    def test_raw_entropy_variant(self):
        params = HyperParams(normalize_entropy=False)
        d = dist(0.25, 0.25, 0.25, 0.25, hint=100)
        assert phi_gen_plus([d], params) == pytest.approx(0.5 * math.log(4) + 0.5)

    @given(st.lists(probability_vectors, min_size=1, max_size=6), st.floats(0.0, 1.0), st.integers(0, 50))
    def test_bounded(self, positions, alpha, extra):
        params = HyperParams(alpha_phi=alpha, beta_phi=1.0 - alpha) if alpha < 1.0 else HyperParams(
            alpha_phi=1.0, beta_phi=0.0)
        dists = [TokenDistribution.from_probs(p, vocab_size_hint=len(p) + extra) for p in positions]
        assert 0.0 <= phi_gen_plus(dists, params) <= 1.0 + 1e-12

    @given(probability_vectors, st.integers(2, 6))
    def test_monotone_under_flatter_position(self, probs, n):
        # replacing a position by the uniform distribution over a support at
        # least as large raises entropy and lowers the gap
        assume(len(probs) <= n)
        sharp = TokenDistribution.from_probs(probs, vocab_size_hint=n)
        flat = TokenDistribution.from_probs([1.0 / n] * n, vocab_size_hint=n)
        other = dist(0.9, 0.1, hint=n)
        assert phi_gen_plus([other, flat]) >= phi_gen_plus([other, sharp]) - 1e-12


class TestPhiSem:
    def test_no_markers(self):
        assert phi_sem("The car is red.") == pytest.approx(0.425557, abs=1e-6)
        assert sigmoid(-0.3) == pytest.approx(0.425557, abs=1e-6)

    def test_empty_text(self):
        assert phi_sem("") == pytest.approx(sigmoid(-0.3))

    def test_weighted_marker(self):
        params = HyperParams(lexicon={"might": 0.5})
        text = "the object on the left might be a red car"
        assert len(text.split()) == 10
        assert marker_density(text, params.lexicon) == pytest.approx(0.05)
        assert phi_sem(text, params) == pytest.approx(0.437823, abs=1e-6)

    def test_case_insensitive_whole_words(self):
        lex = MarkerLexicon({"might": 0.8, "clear": 0.2})
        # "unclear" and "mighty" must not match
        assert marker_density("Might MIGHT unclear clear", lex) == pytest.approx((0.8 + 0.8 + 0.2) / 4)
        assert marker_density("a mighty truck", lex) == 0.0

    def test_longest_match_wins(self):
        lex = MarkerLexicon({"not sure": 1.0, "sure": 0.1})
        assert marker_density("I am not sure", lex) == pytest.approx(1.0 / 4)

    @given(st.lists(st.floats(0.0, 3.0), min_size=2, max_size=20))
    def test_monotone_and_in_open_interval(self, rhos):
        params = HyperParams()
        values = [sigmoid(params.sem_k * (r - params.sem_offset)) for r in sorted(rhos)]
        assert all(0.0 < v < 1.0 for v in values)
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestAssess:
    def test_prefers_generation(self):
        out = AgentOutput("I might be wrong", (dist(1.0),))
        assert assess_uncertainty(out) == (0.0, "generation")

    def test_semantic_fallback(self):
        u, source = assess_uncertainty(AgentOutput("plain text"))
        assert source == "semantic"
        assert u == pytest.approx(sigmoid(-0.3))

    def test_empty_distribution_list_falls_back(self):
        u, source = assess_uncertainty(AgentOutput("plain text", ()))
        assert source == "semantic"

    def test_raw_variant_clamped(self):
        params = HyperParams(normalize_entropy=False, alpha_phi=1.0, beta_phi=1.0)
        out = AgentOutput("x", (dist(0.25, 0.25, 0.25, 0.25, hint=100),))
        assert assess_uncertainty(out, params) == (1.0, "generation")
