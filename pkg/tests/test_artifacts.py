import os

import numpy as np
import pytest

from titlebench.artifacts import (
    atomic_write,
    read_embeddings,
    read_frequencies,
    read_fusion_net,
    read_split,
    write_embeddings,
    write_frequencies,
    write_fusion_net,
    write_split,
)
from titlebench.errors import DataError
from titlebench.evaluation import EvalSplit
from titlebench.fusion import FusionNet
from titlebench.titles import word_frequencies


class TestAtomicWrite:
    def test_failure_leaves_no_file(self, tmp_path):
        target = tmp_path / "out.txt"
        with pytest.raises(RuntimeError):
            with atomic_write(str(target)) as f:
                f.write("partial")
                raise RuntimeError("boom")
        assert not target.exists()
        assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]

    def test_failure_preserves_previous_content(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("original")
        with pytest.raises(RuntimeError):
            with atomic_write(str(target)) as f:
                f.write("partial")
                raise RuntimeError("boom")
        assert target.read_text() == "original"

    def test_success_replaces(self, tmp_path):
        target = tmp_path / "out.txt"
        with atomic_write(str(target)) as f:
            f.write("done")
        assert target.read_text() == "done"


class TestEmbeddings:
    def test_round_trip_with_spacey_keys(self, tmp_path):
        keys = ["software engineer@Acme Corp", "data analyst@Globex", "w1"]
        matrix = np.random.default_rng(0).normal(size=(3, 4))
        path = str(tmp_path / "table.emb")
        write_embeddings(path, keys, matrix)
        got_keys, got = read_embeddings(path)
        assert got_keys == keys
        np.testing.assert_array_equal(got, matrix)

    def test_header_line(self, tmp_path):
        path = str(tmp_path / "table.emb")
        write_embeddings(path, ["a"], np.zeros((1, 3)))
        first = open(path).readline()
        assert first == "1 3\n"

    def test_row_count_mismatch_is_error(self, tmp_path):
        path = str(tmp_path / "table.emb")
        write_embeddings(path, ["a", "b"], np.zeros((2, 2)))
        lines = open(path).read().splitlines()
        open(path, "w").write("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DataError):
            read_embeddings(path)


class TestFusionCheckpoint:
    def test_round_trip(self, tmp_path):
        net = FusionNet.init_random(10, 7, 4, seed=3, leaky_slope=0.7)
        net.enc_b1[:] = 0.25
        path = str(tmp_path / "fusion.net")
        write_fusion_net(path, net)
        loaded = read_fusion_net(path)
        assert loaded.leaky_slope == net.leaky_slope
        for name, value in net.parameters().items():
            np.testing.assert_array_equal(loaded.parameters()[name], value)

    def test_truncated_checkpoint_is_error(self, tmp_path):
        net = FusionNet.init_random(6, 4, 2, seed=0)
        path = str(tmp_path / "fusion.net")
        write_fusion_net(path, net)
        lines = open(path).read().splitlines()
        open(path, "w").write("\n".join(lines[: len(lines) // 2]) + "\n")
        with pytest.raises(DataError):
            read_fusion_net(path)

    def test_wrong_magic_is_error(self, tmp_path):
        path = str(tmp_path / "fusion.net")
        open(path, "w").write("something else\n")
        with pytest.raises(DataError):
            read_fusion_net(path)


def test_split_round_trip(tmp_path):
    split = EvalSplit(
        train=[(0, 1), (1, 2)], valid=[(2, 3)], test=[(3, 4)], dropped=[(4, 5)],
        threshold=5.0, seed=11,
    )
    path = str(tmp_path / "split.tsv")
    write_split(path, split)
    loaded = read_split(path)
    assert loaded.train == split.train
    assert loaded.valid == split.valid
    assert loaded.test == split.test
    assert loaded.dropped == split.dropped
    assert loaded.threshold == split.threshold and loaded.seed == split.seed


def test_frequency_round_trip(tmp_path):
    freq = word_frequencies(["software engineer", "software manager"])
    path = str(tmp_path / "words.freq")
    write_frequencies(path, freq)
    loaded = read_frequencies(path)
    assert loaded.counts == freq.counts
    assert loaded.total_titles == freq.total_titles
