import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from titlebench.graph import build_graph, extend_k_steps
from titlebench.records import extract_transitions
from titlebench.synth import SynthConfig, generate
from titlebench.views import (
    TrainConfig,
    ViewTables,
    balance_sample_loss,
    build_samplers,
    duration_sample_loss,
    joint_prob,
    neighbor_prob,
    semantic_sample_loss,
    step_balance,
    step_duration,
    step_semantic,
    step_topology,
    topology_sample_loss,
    train_views,
    transition_balance,
    transition_duration_score,
)


class TestTransitionBalance:
    def test_symmetric_transitions_score_one(self):
        assert transition_balance(3, 3) == 1.0

    def test_hand_evaluated(self):
        assert transition_balance(1, 2) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_continuity_near_symmetry(self):
        assert transition_balance(10, 10.000001) == pytest.approx(1.0, abs=1e-6)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            transition_balance(0, 1)
        with pytest.raises(ValueError):
            transition_balance(2, -1)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=0.01, max_value=100.0),
        st.floats(min_value=0.01, max_value=100.0),
    )
    def test_symmetry_and_peak(self, a, b):
        assert transition_balance(a, b) == transition_balance(b, a)
        assert 0 < transition_balance(a, b) <= 1
        if a != b:
            assert transition_balance(a, b) < 1


class TestTransitionDuration:
    def test_instant_transition(self):
        assert transition_duration_score(0) == 1.0

    def test_hand_evaluated(self):
        assert transition_duration_score(1.0) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_monotone_decreasing(self):
        assert transition_duration_score(0.5) > transition_duration_score(2.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            transition_duration_score(-0.1)


def _tables(n_nodes=4, n_words=3, dim=2, seed=0):
    return ViewTables.init_random(n_nodes, n_words, dim, seed)


class TestNeighborProb:
    def test_uniform_for_zero_embeddings(self):
        tables = _tables()
        tables.topo_self[:] = 0
        tables.topo_ctx[:] = 0
        assert neighbor_prob(0, 1, tables, [0, 1, 2, 3]) == pytest.approx(0.25)

    def test_hand_computed_softmax(self):
        tables = _tables(n_nodes=3, dim=1)
        tables.topo_self[0] = [1.0]
        tables.topo_ctx[0] = [2.0]
        tables.topo_ctx[1] = [0.0]
        tables.topo_ctx[2] = [0.0]
        expected = math.exp(2) / (math.exp(2) + 2)
        assert neighbor_prob(0, 0, tables, [0, 1, 2]) == pytest.approx(expected, abs=1e-9)

    def test_normalizes_to_one(self):
        tables = _tables(n_nodes=6, dim=3, seed=5)
        total = sum(neighbor_prob(2, j, tables, range(6)) for j in range(6))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_candidate_missing_is_error(self):
        with pytest.raises(ValueError):
            neighbor_prob(0, 3, _tables(), [0, 1])


class TestJointProb:
    def test_orthogonal_vectors(self):
        assert joint_prob(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.5

    def test_log3_dot(self):
        x = np.array([math.log(3.0)])
        y = np.array([1.0])
        assert joint_prob(x, y) == pytest.approx(0.75, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=5), rng.normal(size=5)
        assert joint_prob(x, y) == joint_prob(y, x)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            joint_prob(np.zeros(3), np.zeros(4))


STEP_AND_LOSS = [
    (step_topology, topology_sample_loss, "topo_self", "topo_ctx"),
    (step_semantic, semantic_sample_loss, "sem_title", "sem_word"),
    (step_balance, balance_sample_loss, "balance", "balance"),
    (step_duration, duration_sample_loss, "duration", "duration"),
]


@pytest.mark.parametrize("step,loss_fn,q_name,c_name", STEP_AND_LOSS)
class TestSteps:
    def test_null_step_changes_nothing(self, step, loss_fn, q_name, c_name):
        tables = _tables(seed=3)
        before = tables.copy()
        loss = step(tables, 0, 1, [2, 2], lr=0.0)
        assert loss > 0
        for name in ("topo_self", "topo_ctx", "sem_title", "sem_word", "balance", "duration"):
            np.testing.assert_array_equal(getattr(tables, name), getattr(before, name))

    def test_positive_dot_increases(self, step, loss_fn, q_name, c_name):
        tables = _tables(n_nodes=5, n_words=5, dim=3, seed=1)
        # zero the noise rows so the positive term dominates the update
        getattr(tables, c_name)[2] = 0.0
        getattr(tables, c_name)[3] = 0.0
        before = getattr(tables, c_name)[1] @ getattr(tables, q_name)[0]
        step(tables, 0, 1, [2, 3], lr=0.05)
        after = getattr(tables, c_name)[1] @ getattr(tables, q_name)[0]
        assert after > before

    def test_gradient_matches_finite_differences(self, step, loss_fn, q_name, c_name):
        max_err = _max_gradient_error(step, loss_fn, q_name, c_name, n_configs=25, seed=11)
        assert max_err < 1e-4


def _max_gradient_error(step, loss_fn, q_name, c_name, n_configs, seed):
    """Compare step-applied gradients (recovered at lr=1) to central differences."""
    rng = np.random.default_rng(seed)
    h = 1e-5
    worst = 0.0
    for _ in range(n_configs):
        dim = int(rng.integers(4, 9))
        n_rows = int(rng.integers(4, 9))
        tables = ViewTables.init_random(n_rows, n_rows, dim, seed=int(rng.integers(1 << 30)))
        # spread values wider than the init range so gradients are not tiny
        for name in ("topo_self", "topo_ctx", "sem_title", "sem_word", "balance", "duration"):
            getattr(tables, name)[:] = rng.normal(scale=0.8, size=(n_rows, dim))
        q = int(rng.integers(n_rows))
        pos = int(rng.integers(n_rows))
        negs = rng.integers(0, n_rows, size=int(rng.integers(1, 5)))

        applied = tables.copy()
        step(applied, q, pos, negs, lr=1.0)
        for name in (q_name, c_name):
            before = getattr(tables, name)
            analytic = before - getattr(applied, name)  # lr = 1
            rows = {q} if name == q_name else set()
            if name == c_name:
                rows |= {pos, *negs.tolist()}
            if q_name == c_name:
                rows = {q, pos, *negs.tolist()}
            for r in range(n_rows):
                if r not in rows:
                    assert np.all(analytic[r] == 0)
            for r in sorted(rows):
                for c in range(dim):
                    perturbed = tables.copy()
                    getattr(perturbed, name)[r, c] += h
                    up = loss_fn(perturbed, q, pos, negs)
                    getattr(perturbed, name)[r, c] -= 2 * h
                    down = loss_fn(perturbed, q, pos, negs)
                    fd = (up - down) / (2 * h)
                    scale = max(abs(fd), abs(analytic[r, c]), 1e-8)
                    worst = max(worst, abs(fd - analytic[r, c]) / scale)
    return worst


def small_synthetic_graph(n_persons=400, seed=0):
    cfg = SynthConfig(
        n_companies=4, n_levels=3, n_functions=2, n_persons=n_persons,
        lateral_move_prob=0.6, noise_word_prob=0.1, seed=seed,
    )
    records, _ = generate(cfg)
    from titlebench.titles import aggregate_title, word_frequencies

    freq = word_frequencies(r.title for r in records)
    transitions = extract_transitions(records, lambda t: aggregate_title(t, freq, 30))
    return build_graph(transitions)


class TestTrainViews:
    def test_zero_epochs_keeps_initialization(self):
        g = small_synthetic_graph(80)
        cfg = TrainConfig(epochs=0, seed=4)
        tables, history = train_views(g, cfg, schedule=50)
        init = ViewTables.init_random(g.n_nodes, len(g.vocabulary), 128, seed=4)
        np.testing.assert_array_equal(tables.topo_self, init.topo_self)
        np.testing.assert_array_equal(tables.sem_word, init.sem_word)
        assert all(len(v) == 0 for v in history.values())

    def test_loss_decreases_over_epochs(self):
        g = small_synthetic_graph(400)
        extended = extend_k_steps(g, 2, 0.5)
        cfg = TrainConfig(epochs=10, seed=0)
        _, history = train_views(g, cfg, schedule=1500, extended_edges=extended, dims=16)
        for view, losses in history.items():
            assert len(losses) == 10
            assert losses[9] < losses[0], f"{view} loss did not improve: {losses}"

    def test_same_seed_bit_identical(self):
        g = small_synthetic_graph(120)
        cfg = TrainConfig(epochs=3, seed=9)
        tables1, _ = train_views(g, cfg, schedule=300, dims=8)
        tables2, _ = train_views(g, cfg, schedule=300, dims=8)
        for name in ("topo_self", "topo_ctx", "sem_title", "sem_word", "balance", "duration"):
            np.testing.assert_array_equal(getattr(tables1, name), getattr(tables2, name))

    def test_view_weight_zero_freezes_view(self):
        g = small_synthetic_graph(120)
        cfg = TrainConfig(epochs=2, seed=9, min_learning_rate=0.0)
        tables, _ = train_views(g, cfg, schedule=200, dims=8, view_weights={"balance": 0.0})
        init = ViewTables.init_random(g.n_nodes, len(g.vocabulary), 8, seed=9)
        np.testing.assert_array_equal(tables.balance, init.balance)
        assert not np.array_equal(tables.duration, init.duration)


def test_all_views_have_pairs_on_synthetic_graph():
    g = small_synthetic_graph(400)
    samplers = build_samplers(g)
    for view in ("topology", "semantic", "balance", "duration"):
        assert samplers[view].n_pairs > 0, view


def test_throughput_mode_runs():
    # racy multi-worker updates: no reproducibility contract, but training
    # must complete and leave every table finite
    g = small_synthetic_graph(200)
    cfg = TrainConfig(epochs=2, seed=0)
    tables, history = train_views(g, cfg, schedule=500, dims=8, n_workers=4)
    for name in ("topo_self", "topo_ctx", "sem_title", "sem_word", "balance", "duration"):
        assert np.all(np.isfinite(getattr(tables, name)))
    assert all(np.isfinite(v).all() for v in history.values())
