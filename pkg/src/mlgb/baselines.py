"""Reference methods for the benchmark matrix.

MLP uses node features only, the supervised GCN adds normalized-adjacency
propagation, and DeepWalk embeds pure structure via uniform random walks
trained with skip-gram negative sampling. The two supervised models share
one trainer: the MLP is the GCN with the identity operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import DataSplit, MultiLabelGraph
from .numerics import Adam, ParamTensor, glorot, spmm, sym_normalize


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    hidden_dim: int = 256
    layers: int = 2
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    patience: int = 100
    max_epochs: int = 1000
    num_walks: int = 10
    walk_length: int = 10
    window: int = 5
    embedding_dim: int = 64
    negatives: int = 5
    walk_passes: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("mlp", "gcn", "deepwalk"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        for name in ("hidden_dim", "layers", "patience", "max_epochs",
                     "num_walks", "walk_length", "window", "embedding_dim",
                     "negatives", "walk_passes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.layers != 2:
            raise ValueError("only 2-layer supervised baselines are implemented")


# -- supervised models (MLP / GCN) -------------------------------------------


def _init_supervised(num_features, num_labels, cfg):
    rng = np.random.default_rng(cfg.seed)
    h = cfg.hidden_dim
    return {
        "w0": ParamTensor("w0", glorot(rng, num_features, h)),
        "b0": ParamTensor("b0", np.zeros(h)),
        "w1": ParamTensor("w1", glorot(rng, h, num_labels)),
        "b1": ParamTensor("b1", np.zeros(num_labels)),
    }


def _supervised_logits(params, features, operator):
    """Two-layer forward; operator None means the identity (MLP)."""
    x = features if operator is None else spmm(operator, features)
    pre = x @ params["w0"].value + params["b0"].value
    hidden = np.maximum(pre, 0.0)
    mid = hidden if operator is None else spmm(operator, hidden)
    logits = mid @ params["w1"].value + params["b1"].value
    return {"prop0": x, "pre": pre, "hidden": hidden, "mid": mid,
            "logits": logits}


def _bce(logits, targets):
    """Stable mean binary cross-entropy over all cells."""
    return float(np.mean(np.maximum(logits, 0.0) - logits * targets
                         + np.logaddexp(0.0, -np.abs(logits))))


def supervised_loss_and_grads(params, features, operator, rows, targets):
    """Mean BCE over the given node rows; fills analytic grads. Returns loss."""
    cache = _supervised_logits(params, features, operator)
    logits = cache["logits"][rows]
    loss = _bce(logits, targets)
    count = targets.size
    dlogits_rows = (expit(logits) - targets) / count
    dlogits = np.zeros_like(cache["logits"])
    dlogits[rows] = dlogits_rows
    params["w1"].grad += cache["mid"].T @ dlogits
    params["b1"].grad += dlogits.sum(axis=0)
    dmid = dlogits @ params["w1"].value.T
    dhidden = dmid if operator is None else spmm(operator.T, dmid)
    dpre = dhidden * (cache["pre"] > 0)
    params["w0"].grad += cache["prop0"].T @ dpre
    params["b0"].grad += dpre.sum(axis=0)
    return loss


@dataclass
class SupervisedPredictor:
    kind: str
    config: BaselineConfig
    params: dict
    history: list

    def predict_proba(self, graph: MultiLabelGraph) -> np.ndarray:
        operator = None
        if self.kind == "gcn":
            operator = sym_normalize(graph.adjacency(), add_identity=True)
        cache = _supervised_logits(self.params, graph.features, operator)
        return expit(cache["logits"])


def _train_supervised(graph: MultiLabelGraph, split: DataSplit,
                      cfg: BaselineConfig, use_graph: bool):
    if graph.num_features == 0:
        raise ValueError("supervised baselines need at least one feature column")
    operator = sym_normalize(graph.adjacency(), add_identity=True) if use_graph else None
    params = _init_supervised(graph.num_features, graph.num_labels, cfg)
    ordered = [params[k] for k in sorted(params)]
    optimizer = Adam(ordered, learning_rate=cfg.learning_rate,
                     weight_decay=cfg.weight_decay)
    y_train = graph.labels[split.train].astype(np.float64)
    y_val = graph.labels[split.val].astype(np.float64)
    best_val = np.inf
    best_state = {k: p.value.copy() for k, p in params.items()}
    stall = 0
    history = []
    for _ in range(cfg.max_epochs):
        for p in ordered:
            p.zero_grad()
        train_loss = supervised_loss_and_grads(params, graph.features, operator,
                                               split.train, y_train)
        optimizer.step()
        cache = _supervised_logits(params, graph.features, operator)
        val_loss = (_bce(cache["logits"][split.val], y_val)
                    if len(split.val) else train_loss)
        history.append((train_loss, val_loss))
        if val_loss < best_val - 1e-9:
            best_val = val_loss
            best_state = {k: p.value.copy() for k, p in params.items()}
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    for k, p in params.items():
        p.value[...] = best_state[k]
    return SupervisedPredictor(kind="gcn" if use_graph else "mlp",
                               config=cfg, params=params, history=history)


def train_mlp(graph: MultiLabelGraph, split: DataSplit,
              cfg: BaselineConfig) -> SupervisedPredictor:
    """Feature-only two-layer network with sigmoid outputs, BCE on train
    nodes, early stopping on validation BCE."""
    return _train_supervised(graph, split, cfg, use_graph=False)


def train_gcn(graph: MultiLabelGraph, split: DataSplit,
              cfg: BaselineConfig) -> SupervisedPredictor:
    """Two normalized-adjacency propagation layers with ReLU between and a
    sigmoid head; same objective and stopping rule as the MLP."""
    return _train_supervised(graph, split, cfg, use_graph=True)


# -- DeepWalk -----------------------------------------------------------------


def random_walks(graph: MultiLabelGraph, num_walks, walk_length, seed):
    """Uniform random walks: num_walks passes over a shuffled node order,
    one walk per start node. Walks from isolated nodes have length 1."""
    rng = np.random.default_rng(seed)
    indptr, indices = graph.neighbor_lists()
    deg = (indptr[1:] - indptr[:-1]).astype(np.int64)
    n = graph.num_nodes
    walks = []
    for _ in range(num_walks):
        order = rng.permutation(n)
        isolated = deg[order] == 0
        for node in order[isolated]:
            walks.append(np.array([node], dtype=np.int64))
        active = order[~isolated]
        if len(active) == 0:
            continue
        steps = np.empty((len(active), walk_length), dtype=np.int64)
        steps[:, 0] = active
        cur = active
        for t in range(1, walk_length):
            u = rng.random(len(cur))
            offs = (u * deg[cur]).astype(np.int64)
            cur = indices[indptr[cur] + offs]
            steps[:, t] = cur
        walks.extend(steps)
    return walks


def skipgram_pairs(walks, window):
    """(center, context) pairs within the window, both directions."""
    centers, contexts = [], []
    by_len = {}
    for w in walks:
        by_len.setdefault(len(w), []).append(w)
    for length, group in sorted(by_len.items()):
        if length < 2:
            continue
        mat = np.stack(group)
        for delta in range(1, min(window, length - 1) + 1):
            left = mat[:, :-delta].ravel()
            right = mat[:, delta:].ravel()
            centers.append(left)
            contexts.append(right)
            centers.append(right)
            contexts.append(left)
    if not centers:
        return (np.empty(0, dtype=np.int64),) * 2
    return np.concatenate(centers), np.concatenate(contexts)


def deepwalk_embed(graph: MultiLabelGraph, cfg: BaselineConfig) -> np.ndarray:
    """Structure-only embeddings: skip-gram with negative sampling over
    random-walk co-occurrences. Negatives follow the unigram^0.75 corpus
    distribution; updates are applied in deterministic minibatches."""
    n = graph.num_nodes
    dim = cfg.embedding_dim
    rng = np.random.default_rng([cfg.seed & 0x7FFFFFFF, 3])
    walks = random_walks(graph, cfg.num_walks, cfg.walk_length,
                         [cfg.seed & 0x7FFFFFFF, 4])
    centers, contexts = skipgram_pairs(walks, cfg.window)
    emb_in = (rng.random((n, dim)) - 0.5) / dim
    emb_out = np.zeros((n, dim))
    if len(centers) == 0:
        return emb_in
    counts = np.zeros(n, dtype=np.float64)
    for w in walks:
        np.add.at(counts, w, 1.0)
    noise = counts ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    num_pairs = len(centers)
    batch = 1024
    total_steps = cfg.walk_passes * ((num_pairs + batch - 1) // batch)
    lr0 = 0.025
    step_idx = 0
    for _ in range(cfg.walk_passes):
        perm = rng.permutation(num_pairs)
        for start in range(0, num_pairs, batch):
            sel = perm[start:start + batch]
            ci = centers[sel]
            cj = contexts[sel]
            lr = lr0 * max(1.0 - step_idx / total_steps, 1e-4)
            step_idx += 1
            vin = emb_in[ci]
            g_pos = expit((vin * emb_out[cj]).sum(axis=1)) - 1.0
            negs = np.searchsorted(noise_cdf,
                                   rng.random((len(sel), cfg.negatives)))
            vneg = emb_out[negs]
            g_neg = expit(np.einsum("bd,bkd->bk", vin, vneg))
            grad_in = g_pos[:, None] * emb_out[cj] + np.einsum(
                "bk,bkd->bd", g_neg, vneg)
            np.add.at(emb_in, ci, -lr * grad_in)
            np.add.at(emb_out, cj, -lr * g_pos[:, None] * vin)
            np.add.at(emb_out, negs.ravel(),
                      (-lr * g_neg[:, :, None] * vin[:, None, :]).reshape(-1, dim))
    return emb_in
