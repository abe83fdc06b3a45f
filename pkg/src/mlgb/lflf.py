"""Layerwise feature-label fusion model (LFLF) with GCN-style and
sampled-mean (SAGE-style) aggregation variants.

Per layer k the model runs two parallel streams and fuses them:

    feature stream   X_{k+1} = agg(X_k) W_k
    label stream     Y_{k+1} = C L_k V_k
    fusion           Z_{k+1} = ReLU(beta * X_{k+1} + gamma * Y_{k+1})

where C is the symmetrically normalized label-correlation operator built
from the layer-0 label inputs (ground-truth rows for train nodes, uniform
rows for everything else) and kept frozen across layers by default, and
(beta, gamma) is a per-node softmax over scalar scores from a small shared
tanh scorer applied to each stream. Between layers the fused representation
predicts an intermediate label matrix L_{k+1} = sigmoid(Z_{k+1} theta_k)
that feeds the next label propagation. Training minimizes an unsupervised
graph reconstruction loss on the final fused representation, so ground-truth
labels steer the inputs but never the objective.

All gradients are hand-derived backward passes over this fixed computation
graph, guarded by the central-difference checker in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .data import DataSplit, MultiLabelGraph
from .numerics import Adam, ParamTensor, glorot, spmm, sym_normalize

AGGREGATIONS = ("gcn", "sage")


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message="non-finite training loss"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")


@dataclass(frozen=True)
class LflfConfig:
    num_layers: int = 2
    hidden_dim: int = 256
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    patience: int = 100
    max_epochs: int = 1000
    pos_samples: int = 20
    neg_samples: int = 60
    aggregation: str = "gcn"
    sage_fanout: tuple = (25, 10)
    seed: int = 0
    min_improvement: float = 1e-6
    refresh_label_corr: bool = False

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.neg_samples < 1 or self.pos_samples < 1:
            raise ValueError("sample counts must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.aggregation == "sage" and len(self.sage_fanout) != self.num_layers:
            raise ValueError("sage_fanout length must equal num_layers")


@dataclass
class PropagationState:
    """Per-layer snapshot: feature rep, label input, fused rep, attention."""

    x: np.ndarray
    labels_in: np.ndarray
    z: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


# -- layer building blocks ---------------------------------------------------


def build_label_inputs(graph: MultiLabelGraph, split: DataSplit):
    """Layer-0 label matrix and normalized label-correlation operator.

    Train rows carry the ground-truth multi-hot vector; all other rows are
    uniform 1/|L|. The correlation operator is supported on edges only, with
    entry (u, v) the dot product of the two layer-0 label rows, then
    symmetrically normalized with an added identity. Label rows of val/test
    nodes are never read.
    """
    n, num_labels = graph.labels.shape
    l0 = np.full((n, num_labels), 1.0 / num_labels, dtype=np.float64)
    l0[split.train] = graph.labels[split.train].astype(np.float64)
    corr = label_correlation(graph, l0)
    return l0, sym_normalize(corr, add_identity=True)


def label_correlation(graph: MultiLabelGraph, label_matrix):
    """Edge-supported correlation: entry (u,v) = label row u . label row v."""
    n = graph.num_nodes
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    w = (label_matrix[u] * label_matrix[v]).sum(axis=1)
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    data = np.concatenate([w, w])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _sample_neighbor_mean(graph: MultiLabelGraph, fanout: int, rng):
    """Row-normalized sampled-neighbor operator for one SAGE layer.

    Each node averages over min(degree, fanout) neighbors sampled without
    replacement; with fanout >= degree this is the exact neighbor mean.
    Isolated nodes get a zero row.
    """
    indptr, indices = graph.neighbor_lists()
    n = graph.num_nodes
    rows, cols = [], []
    for node in range(n):
        neigh = indices[indptr[node]:indptr[node + 1]]
        if len(neigh) == 0:
            continue
        if len(neigh) > fanout:
            neigh = rng.choice(neigh, size=fanout, replace=False)
        rows.append(np.full(len(neigh), node, dtype=np.int64))
        cols.append(np.asarray(neigh, dtype=np.int64))
    if not rows:
        return sp.csr_matrix((n, n), dtype=np.float64)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    counts = np.bincount(rows, minlength=n).astype(np.float64)
    data = 1.0 / counts[rows]
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _feature_forward(x, operator, weight, aggregation):
    if aggregation == "gcn":
        prop = spmm(operator, x)
    else:
        prop = np.concatenate([x, spmm(operator, x)], axis=1)
    return prop, prop @ weight


def feature_propagate(x, operator, weight, aggregation="gcn"):
    """One feature-stream step: gcn applies operator @ x @ W; sage concatenates
    self with the (sampled) neighbor-mean operator output before the linear map."""
    return _feature_forward(x, operator, weight, aggregation)[1]


def label_propagate(label_matrix, corr_norm, weight):
    """One label-stream step: normalized correlation operator, then linear map."""
    return spmm(corr_norm, label_matrix) @ weight


def _fuse_forward(x_rep, y_rep, w1, w2, b1):
    tx = np.tanh(x_rep @ w1 + b1)
    ty = np.tanh(y_rep @ w1 + b1)
    cx = tx @ w2
    cy = ty @ w2
    top = np.maximum(cx, cy)
    ex = np.exp(cx - top)
    ey = np.exp(cy - top)
    beta = ex / (ex + ey)
    gamma = 1.0 - beta
    s = beta * x_rep + gamma * y_rep
    z = np.maximum(s, 0.0)
    return {"tx": tx, "ty": ty, "beta": beta, "gamma": gamma, "s": s, "z": z}


def fuse(x_rep, y_rep, w1, w2, b1):
    """Attention fusion: per-node softmax weights over the two streams, convex
    combination, ReLU. Returns (z, beta, gamma)."""
    out = _fuse_forward(x_rep, y_rep, w1, w2, b1)
    return out["z"], out["beta"].ravel(), out["gamma"].ravel()


def intermediate_predict(z, theta):
    """Sigmoid label head feeding the next layer's label propagation."""
    return expit(z @ theta)


# -- model -------------------------------------------------------------------


class LflfModel:
    """Parameter container plus forward/backward over the fixed layer graph."""

    def __init__(self, num_features, num_labels, cfg: LflfConfig):
        self.cfg = cfg
        self.num_features = num_features
        self.num_labels = num_labels
        rng = np.random.default_rng(cfg.seed)
        h = cfg.hidden_dim
        factor = 2 if cfg.aggregation == "sage" else 1
        self.params = {}
        for k in range(cfg.num_layers):
            d_in = num_features if k == 0 else h
            self._add(rng, f"feat_w{k}", factor * d_in, h)
            self._add(rng, f"label_w{k}", num_labels, h)
            self._add(rng, f"attn_w1_{k}", h, h)
            self._add(rng, f"attn_b1_{k}", h, h, shape=(h,))
            self._add(rng, f"attn_w2_{k}", h, 1)
            if k < cfg.num_layers - 1:
                self._add(rng, f"head_{k}", h, num_labels)

    def _add(self, rng, name, fan_in, fan_out, shape=None):
        self.params[name] = ParamTensor(name=name,
                                        value=glorot(rng, fan_in, fan_out, shape))

    def param_list(self):
        return [self.params[name] for name in sorted(self.params)]

    def zero_grads(self):
        for p in self.params.values():
            p.zero_grad()

    def forward(self, features, l0, corr_norm, operators, graph=None):
        """Run all layers; cache["z_final"] is the fused output representation.

        operators holds one aggregation operator per layer (for gcn, the same
        normalized adjacency repeated). graph is only needed for the
        refresh_label_corr variant, whose refreshed operator is treated as
        data (no gradient flows through its entries).
        """
        cfg = self.cfg
        cache = {"layers": []}
        x = features
        labels_in = l0
        corr = corr_norm
        for k in range(cfg.num_layers):
            p = self.params
            prop, h_rep = _feature_forward(x, operators[k], p[f"feat_w{k}"].value,
                                           cfg.aggregation)
            q = spmm(corr, labels_in)
            g_rep = q @ p[f"label_w{k}"].value
            fused = _fuse_forward(h_rep, g_rep, p[f"attn_w1_{k}"].value,
                                  p[f"attn_w2_{k}"].value, p[f"attn_b1_{k}"].value)
            layer = {"x_in": x, "l_in": labels_in, "op": operators[k],
                     "corr_op": corr, "prop": prop, "h": h_rep, "q": q,
                     "g": g_rep}
            layer.update(fused)
            if k < cfg.num_layers - 1:
                labels_in = intermediate_predict(fused["z"],
                                                 p[f"head_{k}"].value)
                layer["l_out"] = labels_in
                if cfg.refresh_label_corr:
                    if graph is None:
                        raise ValueError("refresh_label_corr needs the graph")
                    corr = sym_normalize(label_correlation(graph, labels_in),
                                         add_identity=True)
            cache["layers"].append(layer)
            x = h_rep
        cache["z_final"] = cache["layers"][-1]["z"]
        return cache

    def backward(self, cache, dz_final):
        """Accumulate parameter gradients given d(loss)/d(z_final)."""
        cfg = self.cfg
        num_layers = cfg.num_layers
        dz_next = dz_final
        dx_next = None
        for k in range(num_layers - 1, -1, -1):
            p = self.params
            layer = cache["layers"][k]
            ds = dz_next * (layer["s"] > 0)
            h_rep, g_rep = layer["h"], layer["g"]
            beta, gamma = layer["beta"], layer["gamma"]
            dh = beta * ds
            if dx_next is not None:
                dh = dh + dx_next
            dg = gamma * ds
            dbeta = (ds * h_rep).sum(axis=1, keepdims=True)
            dgamma = (ds * g_rep).sum(axis=1, keepdims=True)
            dcx = beta * gamma * (dbeta - dgamma)
            dcy = -dcx
            tx, ty = layer["tx"], layer["ty"]
            w1 = p[f"attn_w1_{k}"].value
            w2 = p[f"attn_w2_{k}"].value
            p[f"attn_w2_{k}"].grad += tx.T @ dcx + ty.T @ dcy
            dpre_x = (dcx @ w2.T) * (1.0 - tx ** 2)
            dpre_y = (dcy @ w2.T) * (1.0 - ty ** 2)
            dh = dh + dpre_x @ w1.T
            dg = dg + dpre_y @ w1.T
            p[f"attn_w1_{k}"].grad += h_rep.T @ dpre_x + g_rep.T @ dpre_y
            p[f"attn_b1_{k}"].grad += dpre_x.sum(axis=0) + dpre_y.sum(axis=0)
            # label stream
            p[f"label_w{k}"].grad += layer["q"].T @ dg
            dq = dg @ p[f"label_w{k}"].value.T
            dl_in = spmm(layer["corr_op"].T, dq)
            # feature stream
            p[f"feat_w{k}"].grad += layer["prop"].T @ dh
            dprop = dh @ p[f"feat_w{k}"].value.T
            if cfg.aggregation == "gcn":
                dx_next = spmm(layer["op"].T, dprop)
            else:
                d_in = layer["x_in"].shape[1]
                dx_next = dprop[:, :d_in] + spmm(layer["op"].T, dprop[:, d_in:])
            if k >= 1:
                l_in = layer["l_in"]
                dpre = dl_in * l_in * (1.0 - l_in)
                prev_z = cache["layers"][k - 1]["z"]
                p[f"head_{k-1}"].grad += prev_z.T @ dpre
                dz_next = dpre @ p[f"head_{k-1}"].value.T
        return dx_next

    def states(self, cache):
        return [PropagationState(x=layer["h"], labels_in=layer["l_in"],
                                 z=layer["z"], beta=layer["beta"].ravel(),
                                 gamma=layer["gamma"].ravel())
                for layer in cache["layers"]]


# -- reconstruction loss -----------------------------------------------------


def _sample_loss_pairs(graph: MultiLabelGraph, pos_samples, neg_samples, seed):
    """Positive neighbor pairs and per-node negative draws.

    Positives: pos_samples neighbors per non-isolated node, without
    replacement when the degree allows, otherwise with replacement.
    Negatives: neg_samples uniform draws from the non-neighbors (self
    excluded); nodes whose non-neighbor pool is empty get none.
    """
    if graph.num_edges == 0:
        raise ValueError("reconstruction loss is undefined on an edgeless graph")
    rng = np.random.default_rng(seed)
    indptr, indices = graph.neighbor_lists()
    n = graph.num_nodes
    pos_u, pos_v = [], []
    neg_u, neg_v = [], []
    for node in range(n):
        neigh = indices[indptr[node]:indptr[node + 1]]
        deg = len(neigh)
        if deg == 0:
            continue
        picked = rng.choice(neigh, size=pos_samples, replace=deg < pos_samples)
        pos_u.append(np.full(pos_samples, node, dtype=np.int64))
        pos_v.append(picked.astype(np.int64))
        pool = n - 1 - deg
        if pool > 0:
            draws = rng.integers(0, pool, size=neg_samples)
            forbidden = np.sort(np.append(neigh, node))
            shifted = forbidden - np.arange(len(forbidden))
            mapped = draws + np.searchsorted(shifted, draws, side="right")
            neg_u.append(np.full(neg_samples, node, dtype=np.int64))
            neg_v.append(mapped.astype(np.int64))
    pos_u = np.concatenate(pos_u)
    pos_v = np.concatenate(pos_v)
    if neg_u:
        neg_u = np.concatenate(neg_u)
        neg_v = np.concatenate(neg_v)
    else:
        neg_u = np.empty(0, dtype=np.int64)
        neg_v = np.empty(0, dtype=np.int64)
    return pos_u, pos_v, neg_u, neg_v


def _recon_terms(z, pairs, pos_samples, neg_samples):
    """Loss and d(loss)/dz for presampled pairs."""
    pos_u, pos_v, neg_u, neg_v = pairs
    total_pairs = len(pos_u)
    s_pos = (z[pos_u] * z[pos_v]).sum(axis=1)
    loss = np.logaddexp(0.0, -s_pos).sum() / total_pairs
    dz = np.zeros_like(z)
    coef = (expit(s_pos) - 1.0) / total_pairs
    np.add.at(dz, pos_u, coef[:, None] * z[pos_v])
    np.add.at(dz, pos_v, coef[:, None] * z[pos_u])
    if len(neg_u):
        # each node's mean negative term rides along with each of its
        # pos_samples positive pairs
        s_neg = (z[neg_u] * z[neg_v]).sum(axis=1)
        scale = pos_samples / (neg_samples * total_pairs)
        loss += np.logaddexp(0.0, s_neg).sum() * scale
        coef_n = expit(s_neg) * scale
        np.add.at(dz, neg_u, coef_n[:, None] * z[neg_v])
        np.add.at(dz, neg_v, coef_n[:, None] * z[neg_u])
    return float(loss), dz


def reconstruction_loss(z, graph: MultiLabelGraph, pos_samples, neg_samples,
                        seed) -> float:
    """Negative-sampling reconstruction objective on representations z."""
    pairs = _sample_loss_pairs(graph, pos_samples, neg_samples, seed)
    loss, _ = _recon_terms(np.asarray(z, dtype=np.float64), pairs,
                           pos_samples, neg_samples)
    return loss


# -- training ----------------------------------------------------------------


def _gcn_operators(graph, cfg):
    a_hat = sym_normalize(graph.adjacency(), add_identity=True)
    return [a_hat] * cfg.num_layers


def _sage_operators(graph, cfg, stream):
    ops = []
    for k in range(cfg.num_layers):
        rng = np.random.default_rng([cfg.seed & 0x7FFFFFFF, *stream, k])
        ops.append(_sample_neighbor_mean(graph, cfg.sage_fanout[k], rng))
    return ops


def train(graph: MultiLabelGraph, split: DataSplit, cfg: LflfConfig):
    """Train with Adam on the reconstruction loss.

    Early-stops when the training loss has not improved by more than
    min_improvement for `patience` consecutive epochs. Returns
    (model, z_final, history); history is the per-epoch loss log.
    """
    model = LflfModel(graph.num_features, graph.num_labels, cfg)
    l0, corr_norm = build_label_inputs(graph, split)
    optimizer = Adam(model.param_list(), learning_rate=cfg.learning_rate,
                     weight_decay=cfg.weight_decay)
    gcn_ops = _gcn_operators(graph, cfg) if cfg.aggregation == "gcn" else None
    history = []
    best = np.inf
    stall = 0
    for epoch in range(cfg.max_epochs):
        ops = gcn_ops if gcn_ops is not None else _sage_operators(
            graph, cfg, (1, epoch))
        cache = model.forward(graph.features, l0, corr_norm, ops, graph=graph)
        pairs = _sample_loss_pairs(graph, cfg.pos_samples, cfg.neg_samples,
                                   [cfg.seed & 0x7FFFFFFF, 1000, epoch])
        loss, dz = _recon_terms(cache["z_final"], pairs, cfg.pos_samples,
                                cfg.neg_samples)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        history.append(loss)
        model.zero_grads()
        model.backward(cache, dz)
        optimizer.step()
        if loss < best - cfg.min_improvement:
            best = loss
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    return model, embed(model, graph, split), history


def embed_with_states(model: LflfModel, graph: MultiLabelGraph,
                      split: DataSplit):
    """Deterministic final-layer representation plus per-layer states.

    Rebuilds label inputs from train labels only (same protocol as training);
    the SAGE variant samples with a fixed embed-stage stream.
    """
    cfg = model.cfg
    l0, corr_norm = build_label_inputs(graph, split)
    if cfg.aggregation == "gcn":
        ops = _gcn_operators(graph, cfg)
    else:
        ops = _sage_operators(graph, cfg, (2,))
    cache = model.forward(graph.features, l0, corr_norm, ops, graph=graph)
    return cache["z_final"].copy(), model.states(cache)


def embed(model: LflfModel, graph: MultiLabelGraph, split: DataSplit):
    """Final-layer representation for all nodes."""
    return embed_with_states(model, graph, split)[0]
