"""Label-induced similarity metrics for multi-label graphs.

Two quantities drive the benchmark analysis: first-order label homophily
(mean Jaccard similarity of the label sets at the two ends of every edge)
and the second-order cross-class neighborhood similarity matrix, which
compares the neighbor-label histograms of nodes across class pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MultiLabelGraph


class UndefinedMetricError(ValueError):
    """The metric is undefined on this input (e.g. no edges)."""


@dataclass(frozen=True)
class CcnsMatrix:
    """Symmetric class-by-class neighborhood-similarity matrix.

    values[c, c'] averages cos(d(i), d(j)) over node pairs i in class c,
    j in class c' (i != j), each pair weighted by 1/(|L(i)||L(j)|) and the
    average normalized by |V_c| * |V_c'|. class_sizes[c] = |V_c|.
    """

    values: np.ndarray
    class_sizes: np.ndarray

    def to_csv(self):
        num = self.values.shape[0]
        header = "," + ",".join(str(c) for c in range(num))
        lines = [header]
        for c in range(num):
            row = ",".join(format(v, ".10g") for v in self.values[c])
            lines.append(f"{c},{row}")
        return "\n".join(lines) + "\n"


def label_homophily(graph: MultiLabelGraph) -> float:
    """Mean Jaccard similarity of endpoint label sets over all edges.

    Each undirected edge counts once; an edge between two unlabeled nodes
    contributes 0 (Jaccard of empty sets is taken as 0).
    """
    if graph.num_edges == 0:
        raise UndefinedMetricError("label homophily is undefined on an edgeless graph")
    y = graph.labels
    u = graph.edges[:, 0]
    v = graph.edges[:, 1]
    inter = np.minimum(y[u], y[v]).sum(axis=1).astype(np.float64)
    union = np.maximum(y[u], y[v]).sum(axis=1).astype(np.float64)
    jac = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
    return float(jac.mean())


def neighbor_label_histograms(graph: MultiLabelGraph) -> np.ndarray:
    """d(i): per-node raw count over classes of the labels of i's neighbors."""
    adj = graph.adjacency()
    return np.asarray(adj @ graph.labels.astype(np.float64))


def ccns(graph: MultiLabelGraph) -> CcnsMatrix:
    """Cross-class neighborhood similarity matrix.

    Exact evaluation: grouping the pair sum by class membership reduces it to
    two rank-|L| matrix products over the normalized histograms, minus the
    excluded i == j diagonal terms.
    """
    y = graph.labels.astype(np.float64)
    num_labels = graph.num_labels
    hist = neighbor_label_histograms(graph)
    norms = np.linalg.norm(hist, axis=1)
    unit = np.divide(hist, norms[:, None], out=np.zeros_like(hist),
                     where=norms[:, None] > 0)
    label_counts = y.sum(axis=1)
    inv_counts = np.divide(np.ones_like(label_counts), label_counts,
                           out=np.zeros_like(label_counts), where=label_counts > 0)
    weighted = y * inv_counts[:, None]
    # sum over all (i, j): G[c] = sum_i y_ic / |L(i)| * unit_i
    g = weighted.T @ unit
    total = g @ g.T
    # remove i == j terms: cos(d_i, d_i) = 1 when d_i != 0
    self_cos = (norms > 0).astype(np.float64)
    corr = (y * (inv_counts ** 2 * self_cos)[:, None]).T @ y
    class_sizes = y.sum(axis=0)
    denom = np.outer(class_sizes, class_sizes)
    values = np.divide(total - corr, denom,
                       out=np.zeros((num_labels, num_labels)), where=denom > 0)
    values = 0.5 * (values + values.T)  # enforce exact symmetry
    return CcnsMatrix(values=values, class_sizes=class_sizes.astype(np.int64))


def edge_density(graph: MultiLabelGraph) -> float:
    """|E| over the number of unordered node pairs."""
    n = graph.num_nodes
    if n < 2:
        raise UndefinedMetricError("edge density needs at least two nodes")
    return graph.num_edges / (n * (n - 1) / 2.0)
