import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from titlebench.errors import DataError
from titlebench.evaluation import (
    EvalSplit,
    evaluate,
    mp_at_k,
    mrr,
    random_ranking_baseline,
    rank_candidates,
    rank_of_target,
    robustness_sweep,
    subsample_train_edges,
    threshold_and_split,
)
from titlebench.graph import build_graph
from titlebench.records import Transition
from titlebench.titles import NodeKey


def chain_graph(n_nodes, weight=10):
    transitions = []
    for i in range(n_nodes - 1):
        src = NodeKey((f"n{i}",), "x")
        dst = NodeKey((f"n{i + 1}",), "x")
        transitions += [Transition(src, dst, 12)] * weight
    return build_graph(transitions)


def random_graph(rng, n_nodes=12, p=0.4, max_w=12):
    transitions = []
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i != j and rng.random() < p:
                src = NodeKey((f"n{i}",), "x")
                dst = NodeKey((f"n{j}",), "x")
                transitions += [Transition(src, dst, 12)] * int(rng.integers(1, max_w))
    if not transitions:
        transitions = [Transition(NodeKey(("n0",), "x"), NodeKey(("n1",), "x"), 12)] * max_w
    return build_graph(transitions)


class TestThresholdAndSplit:
    def test_eighty_ten_ten(self):
        g = random_graph(np.random.default_rng(0), n_nodes=30, p=0.25)
        surviving = sum(1 for e in g.edges.values() if e.w > 5)
        split = threshold_and_split(g, 5, seed=1)
        p = surviving // 10
        assert len(split.test) + len(split.valid) + len(split.dropped) == 2 * p
        assert len(split.train) == surviving - 2 * p

    def test_hundred_edges_split_counts(self):
        # exactly 100 surviving edges: (i, i+k mod 25) for k in 1..4, weight 6
        transitions = []
        for i in range(25):
            for k in range(1, 5):
                src = NodeKey((f"n{i}",), "x")
                dst = NodeKey((f"n{(i + k) % 25}",), "x")
                transitions += [Transition(src, dst, 12)] * 6
        g = build_graph(transitions)
        split = threshold_and_split(g, 5, seed=0)
        assert len(split.train) == 80
        assert len(split.valid) + len(split.test) + len(split.dropped) == 20

    def test_refuses_when_too_few_edges(self):
        g = chain_graph(5, weight=10)
        with pytest.raises(DataError):
            threshold_and_split(g, weight_threshold=1e9)

    def test_threshold_is_strict(self):
        g = chain_graph(30, weight=5)  # every edge has w == 5
        with pytest.raises(DataError):
            threshold_and_split(g, weight_threshold=5)

    def test_partition_identity(self):
        for seed in range(20):
            g = random_graph(np.random.default_rng(seed))
            try:
                split = threshold_and_split(g, 5, seed=seed)
            except DataError:
                continue
            surviving = {p for p, e in g.edges.items() if e.w > 5}
            rejoined = set(split.train) | set(split.valid) | set(split.test) | set(split.dropped)
            assert rejoined == surviving
            assert len(split.train) + len(split.valid) + len(split.test) + len(split.dropped) == len(surviving)

    def test_cold_start_drops_unseen_endpoints(self):
        for seed in range(20):
            g = random_graph(np.random.default_rng(100 + seed))
            try:
                split = threshold_and_split(g, 5, seed=seed)
            except DataError:
                continue
            train_nodes = {i for e in split.train for i in e}
            for (i, j) in split.valid + split.test:
                assert i in train_nodes and j in train_nodes

    def test_deterministic(self):
        g = random_graph(np.random.default_rng(5))
        a = threshold_and_split(g, 5, seed=7)
        b = threshold_and_split(g, 5, seed=7)
        assert a.train == b.train and a.test == b.test


class TestRankCandidates:
    def test_exact_match_ranks_first(self):
        vectors = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        assert rank_candidates(0, vectors, [1, 2, 3])[0] == 1

    def test_scaling_leaves_order_unchanged(self):
        rng = np.random.default_rng(2)
        vectors = rng.normal(size=(10, 4))
        order = rank_candidates(0, vectors, range(1, 10))
        assert rank_candidates(0, vectors * 3.0, range(1, 10)) == order

    def test_tie_broken_by_lower_id(self):
        vectors = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        assert rank_candidates(0, vectors, [2, 1]) == [1, 2]

    def test_zero_norm_query_falls_back_to_id_order(self):
        vectors = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert rank_candidates(0, vectors, [2, 1]) == [1, 2]

    def test_rank_of_target_agrees_with_full_ordering(self):
        rng = np.random.default_rng(4)
        vectors = rng.normal(size=(15, 3))
        cand = np.arange(1, 15)
        order = rank_candidates(0, vectors, cand)
        from titlebench.evaluation import _unit_rows

        unit = _unit_rows(vectors)
        for target in cand:
            assert order.index(target) + 1 == rank_of_target(0, int(target), unit, cand)


class TestMetrics:
    def test_mrr_single_hit(self):
        assert mrr([1]) == 1.0

    def test_mrr_hand_evaluated(self):
        assert mrr([1, 2, 4]) == pytest.approx((1 + 0.5 + 0.25) / 3, abs=1e-12)

    def test_mrr_rank_ten(self):
        assert mrr([10]) == pytest.approx(0.1, abs=1e-12)

    def test_mrr_empty_is_error(self):
        with pytest.raises(ValueError):
            mrr([])

    def test_mrr_is_one_iff_all_rank_one(self):
        assert mrr([1, 1, 1]) == 1.0
        assert mrr([1, 1, 2]) < 1.0

    def test_mp_within_top_k(self):
        assert mp_at_k([3], 5) == 1.0

    def test_mp_outside_top_k(self):
        assert mp_at_k([6], 5) == 0.0

    def test_mp_hand_counted(self):
        assert mp_at_k([1, 7, 3], 5) == pytest.approx(2 / 3, abs=1e-12)

    def test_mp_empty_is_error(self):
        with pytest.raises(ValueError):
            mp_at_k([], 5)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=50), min_size=1, max_size=30))
    def test_mp_monotone_in_k(self, ranks):
        values = [mp_at_k(ranks, k) for k in (5, 10, 15, 20)]
        assert values == sorted(values)
        assert mrr(ranks) <= 1.0 and mrr(ranks) > 0.0


def perfect_split_and_vectors(n_nodes=12):
    """Each node i has test edge (i, i+1); vectors make the target uniquely closest."""
    train = [(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j]
    test = [(i, (i + 1) % n_nodes) for i in range(0, n_nodes, 2)]
    split = EvalSplit(train=train, valid=[], test=test, threshold=0, seed=0)
    vectors = np.eye(n_nodes)
    for (i, j) in test:
        vectors[i] = vectors[i] + 0.9 * np.eye(n_nodes)[j]
    return split, vectors


class TestEvaluate:
    def test_perfect_vectors_score_one(self):
        split, vectors = perfect_split_and_vectors()
        report = evaluate(vectors, split)
        assert report.mrr == 1.0
        assert all(v == 1.0 for v in report.precision_at.values())

    def test_random_vectors_match_random_ranking_baseline(self):
        rng = np.random.default_rng(0)
        n = 60
        train = [(i, (i + k) % n) for i in range(n) for k in (1, 2, 3)]
        test = [(i, (i + 4) % n) for i in range(n)]
        split = EvalSplit(train=train, valid=[], test=test, threshold=0, seed=0)
        vectors = rng.normal(size=(n, 8))
        report = evaluate(vectors, split)
        mean, std = random_ranking_baseline(n - 1, len(test), trials=400, seed=1)
        assert abs(report.mrr - mean) <= 3 * std

    def test_mp_monotone_across_ks(self):
        rng = np.random.default_rng(5)
        split, _ = perfect_split_and_vectors()
        report = evaluate(rng.normal(size=(12, 4)), split)
        values = [report.precision_at[k] for k in sorted(report.precision_at)]
        assert values == sorted(values)

    def test_scale_invariance_of_report(self):
        rng = np.random.default_rng(6)
        split, _ = perfect_split_and_vectors()
        vectors = rng.normal(size=(12, 4))
        a = evaluate(vectors, split)
        b = evaluate(vectors * 3.0, split)
        assert a.mrr == b.mrr and a.precision_at == b.precision_at


class TestRobustness:
    def test_subsample_counts(self):
        split = EvalSplit(train=[(i, i + 1) for i in range(100)], valid=[], test=[(0, 1)])
        assert len(subsample_train_edges(split, 0.6, seed=3)) == 60

    def test_subsample_deterministic(self):
        split = EvalSplit(train=[(i, i + 1) for i in range(50)], valid=[], test=[])
        assert subsample_train_edges(split, 0.8, seed=9) == subsample_train_edges(split, 0.8, seed=9)

    def test_rate_one_matches_baseline(self):
        g = random_graph(np.random.default_rng(11), n_nodes=20, p=0.4)
        split = threshold_and_split(g, 5, seed=0)
        rng = np.random.default_rng(0)
        fixed = rng.normal(size=(g.n_nodes, 6))

        def trainer(train_graph, _split):
            return {"model": fixed}

        baseline = evaluate(fixed, split, model="model")
        (swept,) = robustness_sweep(g, trainer, rates=(1.0,), split=split)
        assert swept.mrr == baseline.mrr
        assert swept.precision_at == baseline.precision_at

    def test_sweep_retains_test_set(self):
        g = random_graph(np.random.default_rng(12), n_nodes=20, p=0.4)
        split = threshold_and_split(g, 5, seed=0)
        seen = []

        def trainer(train_graph, given_split):
            seen.append(len(train_graph.edges))
            return {"m": np.random.default_rng(1).normal(size=(g.n_nodes, 4))}

        reports = robustness_sweep(g, trainer, rates=(0.9, 0.6), split=split)
        assert [r.subsample_rate for r in reports] == [0.9, 0.6]
        assert seen[0] == int(np.floor(0.9 * len(split.train)))
        assert seen[1] == int(np.floor(0.6 * len(split.train)))
        assert all(r.n_queries == len(split.test) for r in reports)
