import json

import numpy as np
import pytest

from conftest import build_graph, random_multilabel_graph
from oracles import clustering_coefficient

from mlgb.data import (DatasetFormatError, MultiLabelGraph, dataset_stats,
                       load_dataset, load_split, make_splits, save_dataset,
                       save_split)


def write_dataset(tmp_path, meta, edges, labels, features):
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    (tmp_path / "edges.tsv").write_text(edges)
    (tmp_path / "labels.tsv").write_text(labels)
    (tmp_path / "features.tsv").write_text(features)
    return tmp_path


class TestLoadDataset:
    def test_minimal_two_node_dataset(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 2, "num_labels": 2, "num_features": 1},
            "0\t1\n", "0\t0\n1\t1\n", "0\t0.5\n1\t-1.25\n")
        g = load_dataset(tmp_path)
        assert g.num_nodes == 2
        assert g.num_edges == 1
        assert g.labels.tolist() == [[1, 0], [0, 1]]
        assert np.allclose(g.features, [[0.5], [-1.25]])

    def test_self_loop_rejected_with_line(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 4, "num_labels": 1, "num_features": 1},
            "0\t1\n3\t3\n", "0\t0\n", "0\t0\n1\t0\n2\t0\n3\t0\n")
        with pytest.raises(DatasetFormatError, match=r"edges\.tsv:2.*self-loop"):
            load_dataset(tmp_path)

    def test_duplicate_edge_rejected(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 3, "num_labels": 1, "num_features": 1},
            "0\t1\n1\t0\n", "", "0\t0\n1\t0\n2\t0\n")
        with pytest.raises(DatasetFormatError, match="duplicate edge"):
            load_dataset(tmp_path)

    def test_node_index_out_of_range(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 2, "num_labels": 1, "num_features": 1},
            "0\t5\n", "", "0\t0\n1\t0\n")
        with pytest.raises(DatasetFormatError, match="out of range"):
            load_dataset(tmp_path)

    def test_label_index_out_of_range(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 2, "num_labels": 2, "num_features": 1},
            "", "0\t7\n", "0\t0\n1\t0\n")
        with pytest.raises(DatasetFormatError, match="label index 7"):
            load_dataset(tmp_path)

    def test_non_numeric_feature(self, tmp_path):
        write_dataset(
            tmp_path,
            {"num_nodes": 1, "num_labels": 1, "num_features": 1},
            "", "", "0\tbogus\n")
        with pytest.raises(DatasetFormatError, match="non-numeric"):
            load_dataset(tmp_path)

    def test_missing_file(self, tmp_path):
        (tmp_path / "meta.json").write_text(
            json.dumps({"num_nodes": 1, "num_labels": 1, "num_features": 1}))
        with pytest.raises(DatasetFormatError, match="missing file"):
            load_dataset(tmp_path)


class TestSaveRoundTrip:
    def test_empty_graph(self, tmp_path):
        g = MultiLabelGraph(edges=np.empty((0, 2), dtype=np.int64),
                            features=np.empty((0, 2)),
                            labels=np.empty((0, 3), dtype=np.int8))
        save_dataset(g, tmp_path)
        back = load_dataset(tmp_path)
        assert back.num_nodes == 0
        assert back.num_edges == 0
        assert back.num_labels == 3

    def test_path_graph_round_trip(self, tmp_path):
        g = build_graph(edges=[(0, 1), (1, 2)],
                        labels=[[1, 0], [1, 1], [0, 0]],
                        features=[[0.25, -3.0], [1e-3, 7.5], [2.0, 2.0]])
        save_dataset(g, tmp_path)
        back = load_dataset(tmp_path)
        assert np.array_equal(back.edges, g.edges)
        assert np.array_equal(back.labels, g.labels)
        assert np.array_equal(back.features, g.features)

    def test_unlabeled_node_round_trips_as_zero_row(self, tmp_path):
        g = build_graph(edges=[(0, 1)], labels=[[1, 1], [0, 0]])
        save_dataset(g, tmp_path)
        assert "1\t\n" in (tmp_path / "labels.tsv").read_text()
        back = load_dataset(tmp_path)
        assert back.labels[1].sum() == 0

    def test_random_graph_round_trips_at_float32_precision(self, tmp_path):
        rng = np.random.default_rng(11)
        g = random_multilabel_graph(rng, 20, num_labels=4)
        save_dataset(g, tmp_path)
        back = load_dataset(tmp_path)
        assert np.array_equal(back.edges, g.edges)
        assert np.array_equal(back.labels, g.labels)
        assert np.array_equal(back.features.astype(np.float32),
                              g.features.astype(np.float32))

    def test_save_is_byte_deterministic(self, tmp_path):
        rng = np.random.default_rng(5)
        g = random_multilabel_graph(rng, 12, num_labels=3)
        save_dataset(g, tmp_path / "a")
        save_dataset(g, tmp_path / "b")
        for name in ("meta.json", "edges.tsv", "labels.tsv", "features.tsv"):
            assert ((tmp_path / "a" / name).read_bytes()
                    == (tmp_path / "b" / name).read_bytes())


class TestMakeSplits:
    def test_sizes_floor_with_remainder_to_train(self, triangle_graph):
        g = build_graph(edges=[], labels=np.zeros((10, 1)))
        split = make_splits(g, (0.6, 0.2, 0.2), seed=7)
        assert (len(split.train), len(split.val), len(split.test)) == (6, 2, 2)
        g5 = build_graph(edges=[], labels=np.zeros((5, 1)))
        split5 = make_splits(g5, (0.6, 0.2, 0.2), seed=7)
        assert (len(split5.train), len(split5.val), len(split5.test)) == (3, 1, 1)

    def test_deterministic_for_seed(self):
        g = build_graph(edges=[], labels=np.zeros((30, 1)))
        a = make_splits(g, (0.6, 0.2, 0.2), seed=3)
        b = make_splits(g, (0.6, 0.2, 0.2), seed=3)
        assert np.array_equal(a.train, b.train)
        assert np.array_equal(a.val, b.val)
        assert np.array_equal(a.test, b.test)

    def test_different_seeds_differ(self):
        g = build_graph(edges=[], labels=np.zeros((30, 1)))
        a = make_splits(g, (0.6, 0.2, 0.2), seed=3)
        b = make_splits(g, (0.6, 0.2, 0.2), seed=4)
        assert not np.array_equal(a.train, b.train)

    def test_partition_property(self):
        rng = np.random.default_rng(0)
        for n in (3, 7, 23, 100):
            g = build_graph(edges=[], labels=np.zeros((n, 1)))
            ratios = (0.5, 0.25, 0.25)
            split = make_splits(g, ratios, seed=int(rng.integers(1000)))
            combined = np.concatenate([split.train, split.val, split.test])
            assert sorted(combined.tolist()) == list(range(n))

    def test_bad_ratios_rejected(self):
        g = build_graph(edges=[], labels=np.zeros((4, 1)))
        with pytest.raises(ValueError, match="sum to 1"):
            make_splits(g, (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(ValueError):
            make_splits(g, (1.2, -0.1, -0.1), seed=0)

    def test_empty_graph_rejected(self):
        g = MultiLabelGraph(edges=np.empty((0, 2), dtype=np.int64),
                            features=np.empty((0, 1)),
                            labels=np.empty((0, 1), dtype=np.int8))
        with pytest.raises(ValueError, match="empty"):
            make_splits(g, (0.6, 0.2, 0.2), seed=0)

    def test_split_file_round_trip(self, tmp_path):
        g = build_graph(edges=[], labels=np.zeros((10, 1)))
        split = make_splits(g, (0.6, 0.2, 0.2), seed=9)
        save_split(split, tmp_path)
        back = load_split(tmp_path, 9, num_nodes=10)
        assert np.array_equal(back.train, split.train)
        assert np.array_equal(back.test, split.test)


class TestDatasetStats:
    def test_triangle_identical_labels(self, triangle_graph):
        stats = dataset_stats(triangle_graph)
        assert stats.clustering_coefficient == 1.0
        assert stats.label_homophily == 1.0
        assert stats.label_count_mean == 1.0
        assert stats.unlabeled_fraction == 0.0

    def test_hand_label_distribution(self):
        g = build_graph(edges=[(0, 1)],
                        labels=[[1, 0], [1, 1], [0, 0]])
        stats = dataset_stats(g)
        assert stats.label_count_mean == pytest.approx(1.0)
        assert stats.label_count_median == 1
        assert stats.label_count_max == 2
        assert stats.unlabeled_fraction == pytest.approx(1 / 3)

    def test_star_distinct_labels(self):
        g = build_graph(edges=[(0, 1), (0, 2), (0, 3)],
                        labels=np.eye(4, dtype=np.int8))
        stats = dataset_stats(g)
        assert stats.clustering_coefficient == 0.0
        assert stats.label_homophily == 0.0

    def test_percentiles_nearest_rank_and_order(self):
        rng = np.random.default_rng(2)
        g = random_multilabel_graph(rng, 40, num_labels=6)
        stats = dataset_stats(g)
        counts = np.sort(g.labels.sum(axis=1))
        for pct, value in ((25, stats.label_count_percentiles_25),
                           (50, stats.label_count_percentiles_50),
                           (75, stats.label_count_percentiles_75)):
            rank = int(np.ceil(pct / 100 * len(counts)))
            assert value == counts[rank - 1]
        assert (stats.label_count_percentiles_25
                <= stats.label_count_percentiles_50
                <= stats.label_count_percentiles_75)

    def test_clustering_matches_bruteforce(self):
        rng = np.random.default_rng(31)
        for trial in range(8):
            g = random_multilabel_graph(rng, int(rng.integers(5, 50)))
            stats = dataset_stats(g)
            expected = clustering_coefficient(g.edges, g.num_nodes)
            assert stats.clustering_coefficient == pytest.approx(expected, abs=1e-12)
