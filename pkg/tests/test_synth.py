import io

import numpy as np
import pytest

from titlebench.graph import build_graph
from titlebench.records import extract_transitions, parse_records, serialize_records
from titlebench.synth import (
    GroundTruth,
    SynthConfig,
    canonical_title,
    company_name,
    generate,
    planted_balance_means,
)
from titlebench.titles import NodeKey, aggregate_title, word_frequencies


def small_cfg(**kw):
    base = dict(n_companies=4, n_levels=3, n_functions=3, n_persons=200, seed=0)
    base.update(kw)
    return SynthConfig(**base)


class TestConfigValidation:
    def test_rejects_zero_counts(self):
        with pytest.raises(ValueError):
            small_cfg(n_persons=0)

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            small_cfg(lateral_move_prob=1.5)

    def test_rejects_factor_at_most_one(self):
        with pytest.raises(ValueError):
            small_cfg(promote_tenure_factor=1.0)


class TestGenerate:
    def test_deterministic(self):
        a, _ = generate(small_cfg())
        b, _ = generate(small_cfg())
        assert a == b

    def test_different_seed_differs(self):
        a, _ = generate(small_cfg(seed=0))
        b, _ = generate(small_cfg(seed=1))
        assert a != b

    def test_records_parse_cleanly(self):
        records, _ = generate(small_cfg())
        result = parse_records(io.StringIO(serialize_records(records)))
        assert result.skipped_lines == 0
        assert len(result.records) == len(records)

    def test_truth_covers_all_lattice_nodes(self):
        cfg = small_cfg()
        _, truth = generate(cfg)
        assert len(truth.labels) == cfg.n_companies * cfg.n_levels * cfg.n_functions
        key = NodeKey(canonical_title(1, 2), company_name(0))
        assert truth.labels[key] == (1, 2)

    def test_lateral_zero_means_only_promotions(self):
        cfg = small_cfg(lateral_move_prob=0.0, n_persons=300, noise_word_prob=0.0)
        records, truth = generate(cfg)
        transitions = extract_transitions(records)
        assert transitions, "some promotions must occur"
        level_of = {canonical_title(f, l): l for f in range(3) for l in range(3)}
        for t in transitions:
            assert t.src.company == t.dst.company
            assert level_of[t.dst.title] == level_of[t.src.title] + 1
        # same-level cross-company pairs still exist as ground-truth labels
        by_level = {}
        for key, (f, l) in truth.labels.items():
            by_level.setdefault((f, l), set()).add(key.company)
        assert all(len(companies) == cfg.n_companies for companies in by_level.values())

    def test_promotion_tenure_exceeds_lateral_tenure(self):
        cfg = small_cfg(n_persons=800, lateral_move_prob=0.5)
        records, _ = generate(cfg)
        transitions = extract_transitions(records)
        assert len(transitions) >= 1000
        lateral, promo = [], []
        for t in transitions:
            if t.src.company == t.dst.company:
                promo.append(t.src_tenure_months)
            else:
                lateral.append(t.src_tenure_months)
        assert np.mean(promo) > np.mean(lateral)

    def test_decorators_are_below_normalization_threshold(self):
        cfg = small_cfg(n_persons=600, noise_word_prob=0.3)
        records, _ = generate(cfg)
        freq = word_frequencies(r.title for r in records)
        decorated = [w for w in freq.counts if w.startswith("zz")]
        assert decorated, "noise words should appear"
        assert max(freq.counts[w] for w in decorated) < 30

    def test_normalization_recovers_canonical_nodes(self):
        cfg = small_cfg(n_persons=600, noise_word_prob=0.3)
        records, truth = generate(cfg)
        freq = word_frequencies(r.title for r in records)
        transitions = extract_transitions(records, lambda t: aggregate_title(t, freq, 30))
        g = build_graph(transitions)
        assert all(key in truth.labels for key in g.keys)


def test_planted_balance_signal():
    # full-scale check: at lateral_move_prob 0.8 with 5000 persons the
    # same-level linked pairs are far more balanced than cross-level ones
    cfg = SynthConfig(n_persons=5000, lateral_move_prob=0.8, seed=3)
    records, truth = generate(cfg)
    freq = word_frequencies(r.title for r in records)
    transitions = extract_transitions(records, lambda t: aggregate_title(t, freq, 30))
    g = build_graph(transitions)
    same, cross = planted_balance_means(g, truth)
    assert same > cross
