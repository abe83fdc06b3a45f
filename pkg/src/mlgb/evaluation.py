"""Multi-label evaluation: micro/macro F1, macro AUROC, macro average
precision, the one-vs-rest logistic readout for embedding methods, and
benchmark-matrix assembly.

Per-label degenerate columns (single-class truth for AUROC, zero positives
for AP) are skipped, and the number of skipped labels is carried into every
report so the macro averages cannot silently inflate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .data import DataSplit, MultiLabelGraph, get_split
from .labelsim import UndefinedMetricError


@dataclass(frozen=True)
class PredictionSet:
    scores: np.ndarray
    truth: np.ndarray
    node_ids: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        truth = np.asarray(self.truth)
        ids = np.asarray(self.node_ids, dtype=np.int64)
        if scores.shape != truth.shape:
            raise ValueError("scores and truth shapes differ")
        if scores.shape[0] != len(ids):
            raise ValueError("node_ids length mismatch")
        if not np.isfinite(scores).all():
            raise ValueError("non-finite prediction score")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "truth", truth.astype(np.int8))
        object.__setattr__(self, "node_ids", ids)


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def micro_f1(pred: PredictionSet, threshold: float = 0.5) -> float:
    """F1 over all node-label cells pooled together."""
    hard = pred.scores >= threshold
    truth = pred.truth.astype(bool)
    tp = float(np.sum(hard & truth))
    fp = float(np.sum(hard & ~truth))
    fn = float(np.sum(~hard & truth))
    return _f1(tp, fp, fn)


def macro_f1(pred: PredictionSet, threshold: float = 0.5) -> float:
    """Mean per-label F1; a label with no positive truth and no positive
    prediction scores 0."""
    hard = pred.scores >= threshold
    truth = pred.truth.astype(bool)
    vals = []
    for col in range(pred.scores.shape[1]):
        tp = float(np.sum(hard[:, col] & truth[:, col]))
        fp = float(np.sum(hard[:, col] & ~truth[:, col]))
        fn = float(np.sum(~hard[:, col] & truth[:, col]))
        vals.append(_f1(tp, fp, fn))
    return float(np.mean(vals))


def _auroc_binary(scores, truth):
    pos = truth > 0
    num_pos = int(pos.sum())
    num_neg = len(truth) - num_pos
    ranks = rankdata(scores, method="average")
    return (ranks[pos].sum() - num_pos * (num_pos + 1) / 2.0) / (num_pos * num_neg)


def macro_auroc(pred: PredictionSet) -> float:
    value, skipped = macro_auroc_detail(pred)
    return value


def macro_auroc_detail(pred: PredictionSet):
    """(mean per-label rank AUROC with mid-rank ties, skipped-label count).
    Labels whose truth column is single-class are skipped; all skipped is an
    error."""
    vals = []
    skipped = 0
    for col in range(pred.scores.shape[1]):
        truth = pred.truth[:, col]
        if truth.min() == truth.max():
            skipped += 1
            continue
        vals.append(_auroc_binary(pred.scores[:, col], truth))
    if not vals:
        raise UndefinedMetricError("all labels single-class; AUROC undefined")
    return float(np.mean(vals)), skipped


def _ap_binary(scores, truth):
    order = np.argsort(-scores, kind="stable")
    hits = truth[order] > 0
    cum_tp = np.cumsum(hits)
    ranks = np.arange(1, len(scores) + 1)
    precision_at_hit = cum_tp[hits] / ranks[hits]
    return float(precision_at_hit.mean())


def macro_ap(pred: PredictionSet) -> float:
    value, skipped = macro_ap_detail(pred)
    return value


def macro_ap_detail(pred: PredictionSet):
    """(mean per-label average precision, skipped-label count).

    AP sweeps the descending-score ranking (ties broken by original index)
    and averages precision at each positive's rank. Labels with zero
    positives are skipped; all skipped is an error."""
    vals = []
    skipped = 0
    for col in range(pred.scores.shape[1]):
        truth = pred.truth[:, col]
        if truth.sum() == 0:
            skipped += 1
            continue
        vals.append(_ap_binary(pred.scores[:, col], truth))
    if not vals:
        raise UndefinedMetricError("no label has a positive; AP undefined")
    return float(np.mean(vals)), skipped


def evaluate_predictions(pred: PredictionSet, threshold: float = 0.5) -> dict:
    """All four metrics plus skipped-label counts; degenerate macro metrics
    come back as None instead of raising."""
    out = {
        "micro_f1": micro_f1(pred, threshold),
        "macro_f1": macro_f1(pred, threshold),
    }
    try:
        out["macro_auroc"], out["skipped_labels_auroc"] = macro_auroc_detail(pred)
    except UndefinedMetricError:
        out["macro_auroc"], out["skipped_labels_auroc"] = None, pred.truth.shape[1]
    try:
        out["macro_ap"], out["skipped_labels_ap"] = macro_ap_detail(pred)
    except UndefinedMetricError:
        out["macro_ap"], out["skipped_labels_ap"] = None, pred.truth.shape[1]
    return out


# -- one-vs-rest logistic readout ---------------------------------------------


def _fit_logistic_gd(x, targets, l2, tol=1e-6, max_iter=10000, w_init=None):
    """All-labels-at-once gradient descent on the L2-regularized logistic
    objective (intercept unpenalized), constant step 1/L with the exact
    Lipschitz bound. Deterministic; stops at max per-label gradient norm < tol."""
    n, d = x.shape
    num_labels = targets.shape[1]
    xt = np.concatenate([x, np.ones((n, 1))], axis=1)
    gram = xt.T @ xt
    lam_max = float(np.linalg.eigvalsh(gram)[-1])
    step = 1.0 / (0.25 * lam_max + l2)
    w = np.zeros((d + 1, num_labels)) if w_init is None else w_init.copy()
    reg_mask = np.ones((d + 1, 1))
    reg_mask[d] = 0.0
    for _ in range(max_iter):
        s = xt @ w
        grad = xt.T @ (expit(s) - targets) + l2 * (w * reg_mask)
        if float(np.linalg.norm(grad, axis=0).max()) < tol:
            break
        w -= step * grad
    return w


def logistic_readout(embeddings, graph: MultiLabelGraph, split: DataSplit,
                     l2: float = 1.0) -> PredictionSet:
    """One independent L2-regularized logistic regression per label, fit on
    the train rows of (standardized) embeddings, probabilities on test rows.

    A label whose training column is single-class gets a constant predictor
    at its training prior."""
    emb = np.asarray(embeddings, dtype=np.float64)
    if not np.isfinite(emb).all():
        raise ValueError("non-finite embedding")
    train, test = split.train, split.test
    mean = emb[train].mean(axis=0)
    std = emb[train].std(axis=0)
    std[std == 0] = 1.0
    x = (emb - mean) / std
    y = graph.labels.astype(np.float64)
    y_train = y[train]
    prior = y_train.mean(axis=0) if len(train) else np.zeros(graph.num_labels)
    trainable = (y_train.min(axis=0) == 0) & (y_train.max(axis=0) == 1)
    scores = np.tile(prior, (len(test), 1))
    if trainable.any():
        w = _fit_logistic_gd(x[train], y_train[:, trainable], l2)
        xt_test = np.concatenate([x[test], np.ones((len(test), 1))], axis=1)
        scores[:, trainable] = expit(xt_test @ w)
    return PredictionSet(scores=scores, truth=graph.labels[test],
                         node_ids=test)


# -- benchmark assembly --------------------------------------------------------


MODEL_KINDS = ("mlp", "gcn", "deepwalk", "lflf-gcn", "lflf-sage")


def predict_with_model(kind, graph, split, overrides=None, seed=0):
    """Train the named model and return its PredictionSet on the test rows."""
    from . import baselines, lflf

    overrides = dict(overrides or {})
    overrides["seed"] = seed
    if kind in ("mlp", "gcn"):
        cfg = baselines.BaselineConfig(kind=kind, **overrides)
        trainer = baselines.train_mlp if kind == "mlp" else baselines.train_gcn
        predictor = trainer(graph, split, cfg)
        scores = predictor.predict_proba(graph)[split.test]
        return PredictionSet(scores=scores, truth=graph.labels[split.test],
                             node_ids=split.test)
    if kind == "deepwalk":
        cfg = baselines.BaselineConfig(kind="deepwalk", **overrides)
        emb = baselines.deepwalk_embed(graph, cfg)
        return logistic_readout(emb, graph, split)
    if kind in ("lflf-gcn", "lflf-sage"):
        aggregation = "gcn" if kind == "lflf-gcn" else "sage"
        cfg = lflf.LflfConfig(aggregation=aggregation, **overrides)
        _, z, _ = lflf.train(graph, split, cfg)
        return logistic_readout(z, graph, split)
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class EvalReport:
    """Benchmark matrix: one row per (model, dataset) with per-seed raw values."""

    rows: list = field(default_factory=list)

    CSV_COLUMNS = (
        "model", "dataset", "seed_count",
        "micro_f1_mean", "micro_f1_std", "macro_f1_mean", "macro_f1_std",
        "macro_auroc_mean", "macro_auroc_std", "macro_ap_mean", "macro_ap_std",
        "skipped_labels_auroc", "skipped_labels_ap", "error",
    )

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        for row in self.rows:
            cells = []
            for col in self.CSV_COLUMNS:
                value = row.get(col, "")
                if value is None:
                    cells.append("")
                elif isinstance(value, float):
                    cells.append(f"{value:.6f}")
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _aggregate(per_seed, metric):
    vals = [m[metric] for m in per_seed if m.get(metric) is not None]
    if not vals:
        return None, None
    return float(np.mean(vals)), float(np.std(vals))


def _benchmark_cell(kind, dataset_dir, graph, seeds, overrides):
    per_seed = []
    for seed in seeds:
        split = get_split(dataset_dir, graph, seed)
        pred = predict_with_model(kind, graph, split, overrides, seed)
        per_seed.append(evaluate_predictions(pred))
    row = {"model": kind, "dataset": str(dataset_dir),
           "seed_count": len(seeds), "error": ""}
    for metric in ("micro_f1", "macro_f1", "macro_auroc", "macro_ap"):
        mean, std = _aggregate(per_seed, metric)
        row[f"{metric}_mean"] = mean
        row[f"{metric}_std"] = std
    for key in ("skipped_labels_auroc", "skipped_labels_ap"):
        row[key] = max(m[key] for m in per_seed)
    row["raw"] = per_seed
    return row


def run_benchmark(models, dataset_dirs, seeds, overrides=None,
                  jobs: int = 1) -> EvalReport:
    """Full (model x dataset) cross-product over the given split seeds.

    A failing cell records its error message and never aborts the matrix;
    rows are emitted in the deterministic (dataset, model) submission order.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .data import load_dataset

    overrides = overrides or {}
    report = EvalReport()
    cells = []
    for dataset_dir in dataset_dirs:
        graph = load_dataset(dataset_dir)
        for kind in models:
            cells.append((kind, dataset_dir, graph))

    def run_cell(cell):
        kind, dataset_dir, graph = cell
        try:
            return _benchmark_cell(kind, dataset_dir, graph, seeds,
                                   overrides.get(kind, {}))
        except Exception as exc:  # cell failures stay in the matrix
            return {"model": kind, "dataset": str(dataset_dir),
                    "seed_count": len(seeds), "error": str(exc) or repr(exc)}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            report.rows = list(pool.map(run_cell, cells))
    else:
        report.rows = [run_cell(cell) for cell in cells]
    return report
