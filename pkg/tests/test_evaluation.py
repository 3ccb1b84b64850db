import numpy as np
import pytest

import oracles
from foci.data import QAInstance, Question, UserWordMatrix
from foci.errors import ContractError, EvaluationError, OutOfVocabularyError
from foci.evaluation import (
    DEFAULT_ALPHAS,
    DEFAULT_BETAS,
    average_precision_at_k,
    baseline_random,
    baseline_shared_foci,
    evaluate,
    model_ranker,
    ndcg_at_k,
    random_ranker,
    reciprocal_rank,
    sweep,
)
from foci.linalg import SparseMatrix
from foci.rank import RankedList
from foci.solver import HyperParams
from foci.synthetic import SyntheticSpec, generate_synthetic


def listed(*users):
    return RankedList(tuple((u, -i) for i, u in enumerate(users)))


class TestMetrics:
    def test_reciprocal_rank(self):
        assert reciprocal_rank(listed(3, 1, 2), {3}) == 1.0
        assert reciprocal_rank(listed(5, 6, 8, 1, 2), {1}) == 0.25
        # accepted {3, 7} at ranks 5 and 2
        assert reciprocal_rank(listed(1, 7, 2, 4, 3), {3, 7}) == 0.5
        assert reciprocal_rank(listed(1, 2), {9}) == 0.0

    def test_average_precision(self):
        assert average_precision_at_k(listed(4, 1, 2, 3, 5), {1}, 5) == 0.5
        assert average_precision_at_k(listed(1, 2, 3, 4, 5), {1, 2}, 5) == 1.0
        assert average_precision_at_k(listed(9, 1, 8, 2, 5), {1, 2}, 5) == 0.5

    def test_ndcg(self):
        assert ndcg_at_k(listed(1, 2, 3), {1}, 5) == 1.0
        assert ndcg_at_k(listed(2, 1, 3), {1}, 5) == pytest.approx(0.6309297535714575, rel=1e-15)
        assert ndcg_at_k(listed(*range(2, 12)), {1, 11}, 5) == 0.0

    def test_empty_accepted_rejected(self):
        for fn in (lambda: reciprocal_rank(listed(1), set()),
                   lambda: average_precision_at_k(listed(1), set(), 5),
                   lambda: ndcg_at_k(listed(1), set(), 5)):
            with pytest.raises(ContractError):
                fn()

    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            m = int(rng.integers(1, 15))
            users = [int(u) for u in rng.permutation(np.arange(1, m + 1))]
            accepted = set(int(a) for a in rng.choice(np.arange(1, m + 1), size=rng.integers(1, m + 1), replace=False))
            k = int(rng.integers(1, 8))
            ranked = listed(*users)
            assert abs(reciprocal_rank(ranked, accepted) - oracles.rr(users, accepted)) <= 1e-12
            assert abs(average_precision_at_k(ranked, accepted, k) - oracles.ap_at_k(users, accepted, k)) <= 1e-12
            assert abs(ndcg_at_k(ranked, accepted, k) - oracles.ndcg_at_k(users, accepted, k)) <= 1e-12
            for v in (reciprocal_rank(ranked, accepted), average_precision_at_k(ranked, accepted, k),
                      ndcg_at_k(ranked, accepted, k)):
                assert 0.0 <= v <= 1.0


def questions(n, accepted=frozenset({1})):
    return [Question(f"q{i:04d}", ("w",), accepted) for i in range(n)]


class TestEvaluate:
    def test_perfect_ranker(self):
        qs = [Question("a", ("w",), {2}), Question("b", ("w",), {3})]
        report = evaluate(qs, lambda q: listed(*sorted(q.accepted), 1, 4), 5)
        assert (report.mrr, report.map_at_k, report.ndcg_at_k) == (1.0, 1.0, 1.0)

    def test_macro_average(self):
        qs = [Question("a", ("w",), {1}), Question("b", ("w",), {1})]
        report = evaluate(qs, lambda q: listed(1, 2) if q.id == "a" else listed(2, 1), 5)
        assert report.mrr == 0.75 and report.questions_evaluated == 2

    def test_oov_skipped_and_counted(self):
        def ranker(q):
            if q.id == "b":
                raise OutOfVocabularyError("nope")
            return listed(1, 2)

        report = evaluate([Question("a", ("w",), {1}), Question("b", ("w",), {1})], ranker, 5)
        assert report.questions_evaluated == 1 and report.questions_skipped == 1

    def test_nothing_to_evaluate(self):
        def ranker(q):
            raise OutOfVocabularyError("nope")

        with pytest.raises(EvaluationError):
            evaluate(questions(3), ranker, 5)

    def test_order_invariant(self):
        rnd = random_ranker(8, trials=3, seed=1)
        qs = questions(30, frozenset({2, 5}))
        a = evaluate(qs, rnd, 5).to_dict()
        b = evaluate(list(reversed(qs)), rnd, 5).to_dict()
        assert a == b

    def test_report_keys(self):
        report = evaluate(questions(2), lambda q: listed(1, 2), 5, "m")
        assert set(report.to_dict()) == {
            "method", "mrr", "map_at_k", "ndcg_at_k", "k_cutoff", "questions_evaluated", "questions_skipped"
        }

    def test_random_ranker_mrr_converges(self):
        report = evaluate(questions(10000), random_ranker(10, trials=1, seed=0), 5)
        assert abs(report.mrr - oracles.harmonic_mean_rr(10)) < 0.01


class TestRandomBaseline:
    def test_single_trial_is_a_permutation(self):
        q = Question("q", ("w",), {1})
        ranked = baseline_random(q, 6, trials=1, seed=4)
        assert sorted(ranked.users) == list(range(1, 7))
        assert sorted(ranked.scores, reverse=True) == [-1.0, -2.0, -3.0, -4.0, -5.0, -6.0]

    def test_deterministic(self):
        q = Question("q", ("w",), {1})
        assert baseline_random(q, 9, 10, 3) == baseline_random(q, 9, 10, 3)

    def test_mean_position_lln(self):
        q = Question("q", ("w",), {1})
        ranked = baseline_random(q, 10, trials=100000, seed=0)
        assert all(abs(-s - 5.5) < 0.1 for s in ranked.scores)

    def test_contract(self):
        with pytest.raises(ContractError):
            baseline_random(Question("q", ("w",), {1}), 0)


def instance(seed, **kw):
    inst = generate_synthetic(SyntheticSpec(seed=seed, **kw))
    return QAInstance(inst.network, inst.content, inst.vocabulary, inst.questions), inst


class TestSharedFoci:
    def test_question_independent(self):
        qa, _ = instance(0, communities=3, community_size=10)
        ranker = baseline_shared_foci(qa, "network", HyperParams(k=3, max_iters=50), "cosine")
        lists = {ranker(q) for q in qa.questions}
        assert len(lists) == 1

    def test_network_mode_ignores_content(self):
        qa, inst = instance(1, communities=3, community_size=10)
        s = qa.content.matrix
        perturbed = SparseMatrix(s.shape, s.indptr, s.indices, s.data * 3.7 + 1.0)
        qa2 = QAInstance(qa.network, UserWordMatrix(perturbed, qa.content.counts), qa.vocabulary, qa.questions)
        h = HyperParams(k=3, max_iters=50)
        q = qa.questions[0]
        assert baseline_shared_foci(qa, "network", h, "pcc")(q) == baseline_shared_foci(qa2, "network", h, "pcc")(q)

    def test_bad_mode(self):
        qa, _ = instance(1, communities=2, community_size=5)
        with pytest.raises(ContractError):
            baseline_shared_foci(qa, "both", HyperParams(k=2), "cosine")

    def test_network_mode_recovers_blocks(self):
        inside, outside = [], []
        for seed in range(20):
            spec = dict(communities=2, community_size=15, p_in=0.4, p_out=0.02)
            qa, _ = instance(seed, **spec)
            ranked = baseline_shared_foci(qa, "network", HyperParams(k=2, seed=seed, max_iters=200), "cosine")(qa.questions[0])
            for pos, user in enumerate(ranked.users, start=1):
                (inside if user < 15 else outside).append(pos)
        assert np.mean(inside) < np.mean(outside)


class TestSweep:
    def test_single_cell_matches_evaluate(self):
        qa, _ = instance(2, communities=3, community_size=10)
        h = HyperParams(k=3, max_iters=60, seed=2)
        grid = sweep(qa, [1.0], [0.5], h, "cosine", 5)
        direct = evaluate(qa, model_ranker(qa, h.with_(alpha=1.0, beta=0.5), "cosine"), 5).to_dict()
        cell = grid.cells[(1.0, 0.5)]
        for key in ("mrr", "map_at_k", "ndcg_at_k", "questions_evaluated", "questions_skipped"):
            assert cell[key] == direct[key]

    def test_default_grid_shape_and_json(self):
        qa, _ = instance(3, communities=2, community_size=6)
        grid = sweep(qa, DEFAULT_ALPHAS, DEFAULT_BETAS, HyperParams(k=2, max_iters=20), "cosine", 5, jobs=3)
        doc = grid.to_dict()
        assert len(doc["cells"]) == 12
        assert {(c["alpha"], c["beta"]) for c in doc["cells"]} == {(a, b) for a in DEFAULT_ALPHAS for b in DEFAULT_BETAS}
        serial = sweep(qa, DEFAULT_ALPHAS, DEFAULT_BETAS, HyperParams(k=2, max_iters=20), "cosine", 5, jobs=1)
        assert serial.to_dict() == doc

    def test_cell_errors_recorded(self):
        qa, _ = instance(3, communities=2, community_size=6)
        grid = sweep(qa, [0.0, 1.0], [0.0], HyperParams(k=2, max_iters=5), "cosine", 5)
        assert "error" in grid.cells[(0.0, 0.0)]
        assert "mrr" in grid.cells[(1.0, 0.0)]

    def test_empty_grid(self):
        qa, _ = instance(3, communities=2, community_size=6)
        with pytest.raises(ContractError):
            sweep(qa, [], [1.0], HyperParams(k=2), "cosine")
