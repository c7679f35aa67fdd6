"""Evaluation-metric checks.

The assignment solver is verified against exhaustive permutation search on
dyadic-valued matrices (sums exact in binary floating point, so equality is
literal). Perplexity pins use chains whose topic rows coincide, making the
per-token score independent of the stochastic fold-in.
"""

import math

import numpy as np
import pytest

from adascan.errors import UnknownWordError
from adascan.metrics import (PAD_FACTOR, CenterMatch, ContingencyTable,
                             cluster_mse, hungarian_min_cost, match_centers,
                             perplexity, purity)
from adascan.models.lda import LdaTopicModel
from adascan.rng import RandomStream


class TestHungarian:
    def test_identity_favoring_matrix(self):
        perm, cost = hungarian_min_cost([[0.0, 1.0], [1.0, 0.0]])
        assert perm == (0, 1)
        assert cost == 0.0

    def test_pinned_three_by_three(self):
        perm, cost = hungarian_min_cost([[4.0, 1.0, 3.0],
                                         [2.0, 0.0, 5.0],
                                         [3.0, 2.0, 2.0]])
        assert cost == 5.0
        assert perm == (1, 0, 2)

    def test_all_equal_ties_break_to_identity(self):
        perm, cost = hungarian_min_cost(np.full((4, 4), 0.75))
        assert perm == (0, 1, 2, 3)
        assert cost == 3.0

    def test_tie_among_distinct_optima(self):
        # both (0,1,2) and (1,0,2) cost 0; lexicographic rule picks the first
        perm, cost = hungarian_min_cost([[0.0, 0.0, 5.0],
                                         [0.0, 0.0, 5.0],
                                         [5.0, 5.0, 0.0]])
        assert cost == 0.0
        assert perm == (0, 1, 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            hungarian_min_cost([[1.0, 2.0]])
        with pytest.raises(ValueError):
            hungarian_min_cost([[1.0, np.inf], [0.0, 1.0]])
        with pytest.raises(ValueError):
            hungarian_min_cost([[np.nan]])
        with pytest.raises(ValueError):
            hungarian_min_cost(np.zeros((0, 0)))

    def test_matches_brute_force_on_random_instances(self):
        from oracles import brute_force_assignment

        gen = np.random.default_rng(0)
        for trial in range(100):
            k = int(gen.integers(1, 7))
            # dyadic entries: every assignment total is exact in floating point
            c = gen.integers(0, 64, size=(k, k)) / 64.0
            perm, cost = hungarian_min_cost(c)
            want_perm, want_cost = brute_force_assignment(c)
            assert cost == want_cost
            assert perm == want_perm


class TestCenterMatch:
    def test_identical_sets_any_order(self):
        true = np.array([[0.0, 0.0], [3.0, 4.0], [-1.0, 2.0]])
        assert cluster_mse(true[[2, 0, 1]], true) == 0.0

    def test_pinned_two_cluster_case(self):
        res = match_centers([[10.0, 10.0], [1.0, 0.0]], [[0.0, 0.0], [10.0, 10.0]])
        assert res.mse == 0.5
        assert set(res.pairs) == {(0, 1), (1, 0)}
        assert res.padding_penalty == 0.0
        assert res.n_unmatched == 0

    def test_translation_invariance(self):
        gen = np.random.default_rng(1)
        inf_c = gen.normal(size=(4, 3))
        true_c = gen.normal(size=(4, 3))
        v = np.array([5.0, -2.0, 0.5])
        assert cluster_mse(inf_c + v, true_c + v) == pytest.approx(
            cluster_mse(inf_c, true_c), rel=1e-9)

    def test_rectangular_padding_reported_separately(self):
        res = match_centers([[0.5], [9.0], [100.0]], [[0.0], [10.0]])
        assert res.mse == pytest.approx((0.5**2 + 1.0**2) / 2)
        assert res.n_unmatched == 1
        assert res.padding_penalty == PAD_FACTOR * 100.0  # largest distance
        assert set(res.pairs) == {(0, 0), (1, 1)}

    def test_validation(self):
        with pytest.raises(ValueError):
            match_centers(np.zeros((0, 2)), [[0.0, 0.0]])
        with pytest.raises(ValueError):
            match_centers([[0.0, 0.0]], [[0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            match_centers([[np.inf, 0.0]], [[0.0, 0.0]])


class TestPurity:
    def test_perfect_clustering(self):
        assert purity([0, 0, 1, 1, 2], ["x", "x", "y", "y", "z"]) == 1.0

    def test_pinned_two_thirds(self):
        assert purity([0, 0, 0, 1, 1, 1],
                      ["a", "a", "b", "b", "b", "a"]) == pytest.approx(2 / 3)

    def test_single_cluster_two_equal_classes(self):
        assert purity([7, 7, 7, 7], [0, 0, 1, 1]) == 0.5

    def test_singletons_are_pure(self):
        assert purity([0, 1, 2, 3], [0, 0, 1, 1]) == 1.0

    def test_relabeling_invariance(self):
        gen = np.random.default_rng(2)
        a = gen.integers(0, 5, size=60)
        b = gen.integers(0, 3, size=60)
        base = purity(a, b)
        assert purity(97 - a * 13, b) == base  # clusters relabeled
        assert purity(a, np.array(["u", "v", "w"])[b]) == base  # classes renamed

    def test_validation(self):
        with pytest.raises(ValueError):
            purity([], [])
        with pytest.raises(ValueError):
            purity([0, 1], [0])

    def test_contingency_table(self):
        t = ContingencyTable.from_labels([0, 0, 1, 1, 1], [5, 6, 6, 6, 6])
        assert t.counts.tolist() == [[1, 1], [0, 3]]
        assert t.row_sums.tolist() == [2, 3]
        assert t.total == 5


def symmetric_rows_chain(eta=1.0):
    # both topic rows end up (2/3, 1/3): per-token score is then independent
    # of the (stochastic) fold-in proportions
    model = LdaTopicModel("collapsed")
    docs = [[0, 0, 0, 0, 0, 0, 1, 1]]
    z = [[0, 0, 0, 1, 1, 1, 0, 1]]
    return model.initial_state(docs, 2, 2, alpha=1.0, eta=eta, init=z)


class TestPerplexity:
    def test_uniform_model_gives_vocab_size(self):
        # K = 1 makes theta-hat 1; huge smoothing makes phi-hat uniform
        model = LdaTopicModel("collapsed")
        chain = model.initial_state([[0, 1, 2]], 1, 7, alpha=1.0, eta=1e9,
                                    init=[[0, 0, 0]])
        val = perplexity([[3, 4], [0, 6]], [chain], RandomStream(0))
        assert val == pytest.approx(7.0, rel=1e-5)

    def test_duplicated_chain_equals_single(self):
        chain = symmetric_rows_chain()
        one = perplexity([[0, 1], [1]], [chain], RandomStream(1))
        two = perplexity([[0, 1], [1]], [chain, chain], RandomStream(1))
        assert one == two

    def test_hand_pinned_two_token_document(self):
        # q(w=0) = 2/3 and q(w=1) = 1/3 exactly; per-document mean gives
        # perplexity exp(-(ln(2/3) + ln(1/3))/2) = 3/sqrt(2)
        val = perplexity([[0, 1]], [symmetric_rows_chain()], RandomStream(2))
        assert val == pytest.approx(3.0 / math.sqrt(2.0), rel=1e-6)

    def test_normalization_conventions_differ_as_derived(self):
        chain = symmetric_rows_chain()
        docs = [[0], [0, 1]]
        per_doc = perplexity(docs, [chain], RandomStream(3))
        per_tok = perplexity(docs, [chain], RandomStream(3),
                             normalization="total_tokens")
        l0, l1 = math.log(2 / 3), math.log(1 / 3)
        assert per_doc == pytest.approx(math.exp(-(l0 + (l0 + l1) / 2) / 2), rel=1e-12)
        assert per_tok == pytest.approx(math.exp(-(2 * l0 + l1) / 3), rel=1e-12)
        assert per_doc != per_tok

    def test_topic_permutation_invariance(self):
        # sharply topic-indicative words make the fold-in deterministic up to
        # astronomically unlikely draws, so the label swap must replay exactly
        model = LdaTopicModel("collapsed")
        words = list(range(10))
        train = [[w] * 40 for w in words]
        z = [[0 if w < 5 else 1] * 40 for w in words]
        orig = model.initial_state(train, 2, 10, alpha=25.0, eta=1e-8, init=z)
        swapped = model.initial_state(train, 2, 10, alpha=25.0, eta=1e-8,
                                      init=[[1 - k for k in zd] for zd in z])
        test_docs = [[0, 5, 1, 6, 2, 7, 3, 8, 4, 9] * 3]
        a = perplexity(test_docs, [orig], RandomStream(4))
        b = perplexity(test_docs, [swapped], RandomStream(4))
        assert a == pytest.approx(b, rel=1e-10)

    def test_entropy_lower_bound(self):
        # per-token cross-entropy >= the document's own empirical entropy
        chain = symmetric_rows_chain()
        docs = [[0, 1, 1, 1], [0, 0, 1, 0]]
        val = perplexity(docs, [chain], RandomStream(5))
        ent = []
        for doc in docs:
            _, counts = np.unique(doc, return_counts=True)
            p = counts / counts.sum()
            ent.append(-(p * np.log(p)).sum())
        bound = math.exp(float(np.mean(ent)))
        assert val >= bound * (1 - 1e-12)

    def test_empty_documents_are_skipped(self):
        chain = symmetric_rows_chain()
        assert perplexity([[], [0, 1]], [chain], RandomStream(6)) == perplexity(
            [[0, 1]], [chain], RandomStream(6))

    def test_unknown_words_rejected(self):
        chain = symmetric_rows_chain()
        with pytest.raises(UnknownWordError) as err:
            perplexity([[0, 3]], [chain], RandomStream(7))
        assert err.value.word_ids == [3]

    def test_validation(self):
        chain = symmetric_rows_chain()
        with pytest.raises(ValueError):
            perplexity([[0]], [], RandomStream(8))
        with pytest.raises(ValueError):
            perplexity([[], []], [chain], RandomStream(8))
        with pytest.raises(ValueError):
            perplexity([[0]], [chain], RandomStream(8), normalization="mean")
        with pytest.raises(ValueError):
            perplexity([[0]], [chain], RandomStream(8), n_passes=-1)
        with pytest.raises(TypeError):
            perplexity([[0]], [chain], np.random.default_rng(8))
        other = LdaTopicModel("collapsed").initial_state([[0]], 3, 2, init=[[0]])
        with pytest.raises(ValueError):
            perplexity([[0]], [chain, other], RandomStream(8))

    def test_distinct_chains_average_inside_log(self):
        # two chains with different smoothing: q must be the mean of the two
        # per-chain scores before the log, not after
        a = symmetric_rows_chain(eta=1.0)   # rows (2/3, 1/3)
        b = symmetric_rows_chain(eta=4.0)   # rows (7/12, 5/12)
        val = perplexity([[0]], [a, b], RandomStream(9))
        q = (2.0 / 3.0 + 7.0 / 12.0) / 2.0
        assert val == pytest.approx(1.0 / q, rel=1e-9)
