"""Core data model: multi-label graphs, dataset directory I/O, splits, statistics.

A dataset directory holds:

    meta.json       {"num_nodes": n, "num_labels": L, "num_features": m}
    edges.tsv       one "u<TAB>v" per line with u < v
    labels.tsv      "node<TAB>l1,l2,..." (empty label list allowed)
    features.tsv    "node<TAB>f1,f2,...,fm"
    splits/<seed>.json   {"train": [...], "val": [...], "test": [...]}

Features are stored at 32-bit precision; everything is computed in float64
in memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class DatasetFormatError(ValueError):
    """A dataset file violates the directory format."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        loc = f"{path}:{line_no}" if line_no is not None else str(path)
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True)
class MultiLabelGraph:
    """Immutable undirected simple graph with features and multi-hot labels.

    edges is an (E, 2) int64 array with u < v, each undirected edge stored
    once; features is (n, m) float64; labels is (n, L) int8 in {0, 1}.
    """

    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels disagree on node count")
        n = features.shape[0]
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if (edges[:, 0] == edges[:, 1]).any():
                raise ValueError("self-loop in edge list")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if (np.diff(edges, axis=0) == 0).all(axis=1).any():
                raise ValueError("duplicate edge in edge list")
            if (edges[:, 0] >= edges[:, 1]).any():
                raise ValueError("edges must be stored with u < v")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        self.edges.setflags(write=False)
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def num_nodes(self):
        return self.features.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def num_features(self):
        return self.features.shape[1]

    @property
    def num_labels(self):
        return self.labels.shape[1]

    def adjacency(self):
        """Symmetric 0/1 CSR adjacency with zero diagonal."""
        n = self.num_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(u), dtype=np.float64)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        adj.sort_indices()
        return adj

    def neighbor_lists(self):
        """Adjacency in CSR index form: (indptr, indices)."""
        adj = self.adjacency()
        return adj.indptr, adj.indices

    def degrees(self):
        n = self.num_nodes
        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def with_features(self, features):
        return MultiLabelGraph(edges=self.edges.copy(), features=features,
                               labels=self.labels.copy())


@dataclass(frozen=True)
class DataSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int
    ratios: tuple

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.int64))


@dataclass(frozen=True)
class DatasetStats:
    num_nodes: int
    num_edges: int
    num_features: int
    num_labels: int
    clustering_coefficient: float
    label_homophily: float
    label_count_median: float
    label_count_mean: float
    label_count_max: float
    label_count_percentiles_25: float
    label_count_percentiles_50: float
    label_count_percentiles_75: float
    unlabeled_fraction: float

    def to_dict(self):
        return {k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
                for k, v in self.__dict__.items()}


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except FileNotFoundError:
        raise DatasetFormatError(path, None, "missing file")


def load_dataset(dir_path) -> MultiLabelGraph:
    """Load a dataset directory, validating the format line by line."""
    root = Path(dir_path)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise DatasetFormatError(meta_path, None, "missing file")
    with open(meta_path, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(meta_path, exc.lineno, f"invalid JSON: {exc.msg}")
    try:
        n = int(meta["num_nodes"])
        num_labels = int(meta["num_labels"])
        num_features = int(meta["num_features"])
    except (KeyError, TypeError, ValueError):
        raise DatasetFormatError(meta_path, None,
                                 "meta must define num_nodes/num_labels/num_features")

    edges_path = root / "edges.tsv"
    seen = set()
    edge_rows = []
    for ln, line in enumerate(_read_lines(edges_path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetFormatError(edges_path, ln, f"expected 'u<TAB>v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetFormatError(edges_path, ln, f"non-integer endpoint in {line!r}")
        if u == v:
            raise DatasetFormatError(edges_path, ln, f"self-loop {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise DatasetFormatError(edges_path, ln, f"node index out of range in {line!r}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DatasetFormatError(edges_path, ln, f"duplicate edge {key}")
        seen.add(key)
        edge_rows.append(key)
    edges = (np.array(edge_rows, dtype=np.int64).reshape(-1, 2)
             if edge_rows else np.empty((0, 2), dtype=np.int64))

    labels_path = root / "labels.tsv"
    labels = np.zeros((n, num_labels), dtype=np.int8)
    seen_nodes = set()
    for ln, line in enumerate(_read_lines(labels_path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) > 2:
            raise DatasetFormatError(labels_path, ln, f"expected 'node<TAB>labels', got {line!r}")
        try:
            node = int(parts[0])
        except ValueError:
            raise DatasetFormatError(labels_path, ln, f"non-integer node id in {line!r}")
        if not 0 <= node < n:
            raise DatasetFormatError(labels_path, ln, f"node index {node} out of range")
        if node in seen_nodes:
            raise DatasetFormatError(labels_path, ln, f"duplicate labels row for node {node}")
        seen_nodes.add(node)
        spec = parts[1].strip() if len(parts) == 2 else ""
        if not spec:
            continue
        for tok in spec.split(","):
            try:
                lab = int(tok)
            except ValueError:
                raise DatasetFormatError(labels_path, ln, f"non-integer label {tok!r}")
            if not 0 <= lab < num_labels:
                raise DatasetFormatError(labels_path, ln, f"label index {lab} out of range")
            labels[node, lab] = 1

    features_path = root / "features.tsv"
    features = np.zeros((n, num_features), dtype=np.float64)
    filled = np.zeros(n, dtype=bool)
    for ln, line in enumerate(_read_lines(features_path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetFormatError(features_path, ln, f"expected 'node<TAB>values', got {line!r}")
        try:
            node = int(parts[0])
        except ValueError:
            raise DatasetFormatError(features_path, ln, f"non-integer node id in {line!r}")
        if not 0 <= node < n:
            raise DatasetFormatError(features_path, ln, f"node index {node} out of range")
        if filled[node]:
            raise DatasetFormatError(features_path, ln, f"duplicate features row for node {node}")
        vals = parts[1].split(",") if parts[1] else []
        if len(vals) != num_features:
            raise DatasetFormatError(
                features_path, ln,
                f"expected {num_features} feature values, got {len(vals)}")
        try:
            row = np.array([float(v) for v in vals], dtype=np.float64)
        except ValueError:
            raise DatasetFormatError(features_path, ln, f"non-numeric feature in {line!r}")
        if not np.isfinite(row).all():
            raise DatasetFormatError(features_path, ln, "non-finite feature value")
        features[node] = row
        filled[node] = True
    if n and not filled.all():
        missing = int(np.flatnonzero(~filled)[0])
        raise DatasetFormatError(features_path, None, f"no features row for node {missing}")

    return MultiLabelGraph(edges=edges, features=features, labels=labels)


def _format_f32(value):
    return np.format_float_positional(np.float32(value), unique=True, trim="0")


def save_dataset(graph: MultiLabelGraph, dir_path) -> None:
    """Write a dataset directory; load_dataset(save_dataset(g)) == g at 32-bit
    feature precision."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "num_nodes": int(graph.num_nodes),
        "num_labels": int(graph.num_labels),
        "num_features": int(graph.num_features),
    }
    with open(root / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(root / "edges.tsv", "w", encoding="utf-8") as fh:
        for u, v in graph.edges:
            fh.write(f"{u}\t{v}\n")
    with open(root / "labels.tsv", "w", encoding="utf-8") as fh:
        for node in range(graph.num_nodes):
            idx = np.flatnonzero(graph.labels[node])
            fh.write(f"{node}\t{','.join(str(i) for i in idx)}\n")
    with open(root / "features.tsv", "w", encoding="utf-8") as fh:
        for node in range(graph.num_nodes):
            row = ",".join(_format_f32(v) for v in graph.features[node])
            fh.write(f"{node}\t{row}\n")


def make_splits(graph: MultiLabelGraph, ratios, seed: int) -> DataSplit:
    """Random node split with sizes floor(r*n) and the remainder going to train."""
    r = tuple(float(x) for x in ratios)
    if len(r) != 3 or any(x <= 0 for x in r):
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(r) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(r)!r}")
    n = graph.num_nodes
    if n == 0:
        raise ValueError("cannot split an empty graph")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val = int(np.floor(r[1] * n))
    n_test = int(np.floor(r[2] * n))
    n_train = n - n_val - n_test
    return DataSplit(
        train=perm[:n_train],
        val=perm[n_train:n_train + n_val],
        test=perm[n_train + n_val:],
        seed=int(seed),
        ratios=r,
    )


def save_split(split: DataSplit, dir_path) -> Path:
    root = Path(dir_path) / "splits"
    root.mkdir(parents=True, exist_ok=True)
    out = root / f"{split.seed}.json"
    payload = {
        "train": [int(i) for i in split.train],
        "val": [int(i) for i in split.val],
        "test": [int(i) for i in split.test],
    }
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    return out


def load_split(dir_path, seed: int, num_nodes=None) -> DataSplit:
    path = Path(dir_path) / "splits" / f"{int(seed)}.json"
    if not path.exists():
        raise DatasetFormatError(path, None, "missing split file")
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    split = DataSplit(
        train=np.array(payload["train"], dtype=np.int64),
        val=np.array(payload["val"], dtype=np.int64),
        test=np.array(payload["test"], dtype=np.int64),
        seed=int(seed),
        ratios=(0.0, 0.0, 0.0),
    )
    if num_nodes is not None:
        combined = np.concatenate([split.train, split.val, split.test])
        if len(np.unique(combined)) != num_nodes:
            raise DatasetFormatError(path, None, "split does not partition the node set")
    return split


def get_split(dataset_dir, graph, seed, ratios=(0.6, 0.2, 0.2)):
    """Split from splits/<seed>.json when present, else a fresh random split."""
    path = Path(dataset_dir) / "splits" / f"{int(seed)}.json"
    if path.exists():
        return load_split(dataset_dir, seed, num_nodes=graph.num_nodes)
    return make_splits(graph, ratios, seed)


def _nearest_rank(sorted_values, pct):
    # nearest-rank percentile: ceil(pct/100 * N)-th smallest, 1-indexed
    n = len(sorted_values)
    if n == 0:
        return 0.0
    rank = int(np.ceil(pct / 100.0 * n))
    rank = min(max(rank, 1), n)
    return float(sorted_values[rank - 1])


def local_clustering(graph: MultiLabelGraph):
    """Per-node local clustering coefficients; degree < 2 contributes 0."""
    n = graph.num_nodes
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    adj = graph.adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    # triangles through each node: diag(A^3)/2 computed row-wise
    tri = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel() / 2.0
    denom = deg * (deg - 1) / 2.0
    out = np.zeros(n, dtype=np.float64)
    mask = denom > 0
    out[mask] = tri[mask] / denom[mask]
    return out


def dataset_stats(graph: MultiLabelGraph) -> DatasetStats:
    """Summary statistics: structure, homophily, and label-count distribution."""
    from .labelsim import label_homophily

    counts = graph.labels.sum(axis=1).astype(np.float64)
    sorted_counts = np.sort(counts)
    n = graph.num_nodes
    clus = float(local_clustering(graph).mean()) if n else 0.0
    homophily = label_homophily(graph) if graph.num_edges else 0.0
    return DatasetStats(
        num_nodes=n,
        num_edges=graph.num_edges,
        num_features=graph.num_features,
        num_labels=graph.num_labels,
        clustering_coefficient=clus,
        label_homophily=float(homophily),
        label_count_median=_nearest_rank(sorted_counts, 50),
        label_count_mean=float(counts.mean()) if n else 0.0,
        label_count_max=float(counts.max()) if n else 0.0,
        label_count_percentiles_25=_nearest_rank(sorted_counts, 25),
        label_count_percentiles_50=_nearest_rank(sorted_counts, 50),
        label_count_percentiles_75=_nearest_rank(sorted_counts, 75),
        unlabeled_fraction=float((counts == 0).mean()) if n else 0.0,
    )
