"""Command-line entry point wiring all subsystems.

Subcommands: generate | corrupt | analyze | split | train | evaluate |
benchmark. Logs go to stderr; machine-readable output goes to files (or
stdout for `analyze` without --out). Exit codes: 0 success, 1 usage error,
2 data/validation error. MLGB_SEED provides the seed when no --seed flag is
given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("mlgb")

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclasses.dataclass
class BenchConfig:
    datasets: list
    models: list
    seeds: list
    overrides: dict
    out: str = None
    jobs: int = 1


def _env_seed(value):
    if value is not None:
        return value
    env = os.environ.get("MLGB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MLGB_SEED must be an integer, got {env!r}")
    return 0


def parse_kv_file(path):
    """Flat key=value config text: comments with '#', commas make lists.
    Returns (entries, errors); entries maps key -> (value string, line no)."""
    entries = {}
    errors = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        return {}, [f"{path}: {exc.strerror or exc}"]
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            errors.append(f"{path}:{lineno}: empty key")
            continue
        if key in entries:
            errors.append(f"{path}:{lineno}: duplicate key {key!r}")
            continue
        entries[key] = (value.strip(), lineno)
    return entries, errors


def _coerce(text, target_type, key):
    if target_type is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key}: expected a boolean, got {text!r}")
    if target_type is int:
        return int(text)
    if target_type is float:
        return float(text)
    if target_type is tuple:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    return text


def _config_field_types():
    from .baselines import BaselineConfig
    from .lflf import LflfConfig

    types = {}
    for cls in (LflfConfig, BaselineConfig):
        for f in dataclasses.fields(cls):
            types.setdefault(f.name, f.type if isinstance(f.type, type)
                             else _annotation_type(f))
    return types


def _annotation_type(f):
    mapping = {"int": int, "float": float, "str": str, "bool": bool,
               "tuple": tuple}
    return mapping.get(str(f.type), str)


def load_model_overrides(config_path, set_args):
    """Model hyperparameters from a key=value file plus --set overrides."""
    types = _config_field_types()
    out = {}
    errors = []
    if config_path:
        entries, errors = parse_kv_file(config_path)
        if errors:
            raise UsageError("; ".join(errors))
        for key, (value, lineno) in entries.items():
            if key not in types:
                raise UsageError(f"{config_path}:{lineno}: unknown option {key!r}")
            out[key] = _coerce(value, types[key], key)
    for item in set_args or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in types:
            raise UsageError(f"--set: unknown option {key!r}")
        out[key] = _coerce(value.strip(), types[key], key)
    out.pop("kind", None)
    out.pop("aggregation", None)
    return out


def validate_config(path) -> BenchConfig:
    """Parse and cross-validate a benchmark config; reports every error."""
    from .evaluation import MODEL_KINDS

    entries, errors = parse_kv_file(path)
    types = _config_field_types()
    datasets, models, seeds, overrides = [], [], [], {}
    out = None
    jobs = 1
    for key, (value, lineno) in entries.items():
        where = f"{path}:{lineno}"
        if key == "datasets":
            datasets = [tok.strip() for tok in value.split(",") if tok.strip()]
        elif key == "models":
            models = [tok.strip() for tok in value.split(",") if tok.strip()]
        elif key == "seeds":
            try:
                seeds = [int(tok) for tok in value.split(",") if tok.strip()]
            except ValueError:
                errors.append(f"{where}: seeds must be integers, got {value!r}")
        elif key == "out":
            out = value
        elif key == "jobs":
            try:
                jobs = int(value)
            except ValueError:
                errors.append(f"{where}: jobs must be an integer")
        elif "." in key:
            model, _, option = key.partition(".")
            if option not in types:
                errors.append(f"{where}: unknown option {option!r} for model {model!r}")
                continue
            try:
                overrides.setdefault(model, {})[option] = _coerce(
                    value, types[option], key)
            except (UsageError, ValueError) as exc:
                errors.append(f"{where}: {exc}")
        else:
            errors.append(f"{where}: unknown key {key!r}")
    if not datasets:
        errors.append(f"{path}: no datasets configured")
    if not models:
        errors.append(f"{path}: no models configured")
    if not seeds:
        errors.append(f"{path}: seed list is empty")
    for dataset in datasets:
        if not Path(dataset).is_dir():
            errors.append(f"{path}: dataset directory does not exist: {dataset}")
    for model in models:
        if model not in MODEL_KINDS:
            errors.append(f"{path}: unknown model {model!r} "
                          f"(choose from {', '.join(MODEL_KINDS)})")
    for model in overrides:
        if model not in MODEL_KINDS:
            errors.append(f"{path}: override for unknown model {model!r}")
    if errors:
        raise ValueError("\n".join(errors))
    return BenchConfig(datasets=datasets, models=models, seeds=seeds,
                       overrides=overrides, out=out, jobs=jobs)


# -- subcommands ---------------------------------------------------------------


def _cmd_generate(args):
    from .data import save_dataset
    from .generator import GeneratorConfig, generate_dataset

    seed = _env_seed(args.seed)
    cfg = GeneratorConfig(num_nodes=args.nodes, num_labels=args.labels,
                          num_features=args.features, alpha=args.alpha,
                          b=args.b, seed=seed,
                          min_sphere_radius=args.min_sphere_radius,
                          max_sphere_radius=args.max_sphere_radius)
    graph = generate_dataset(cfg, target_homophily=args.target_homophily,
                             tol=args.tol)
    save_dataset(graph, args.out)
    log.info("wrote %s: %d nodes, %d edges", args.out, graph.num_nodes,
             graph.num_edges)
    return 0


def _cmd_corrupt(args):
    from .data import load_dataset, save_dataset
    from .generator import CorruptionConfig, corrupt_features

    graph = load_dataset(args.in_dir)
    cc = CorruptionConfig(original_ratio=args.ratio,
                          num_irrelevant=args.irrelevant)
    out = corrupt_features(graph, cc, _env_seed(args.seed))
    save_dataset(out, args.out)
    log.info("wrote %s with %d feature columns", args.out, out.num_features)
    return 0


def _cmd_analyze(args):
    from .data import dataset_stats, load_dataset
    from .labelsim import ccns

    graph = load_dataset(args.data)
    stats = dataset_stats(graph)
    payload = json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    if args.ccns_out:
        matrix = ccns(graph)
        Path(args.ccns_out).write_text(matrix.to_csv(), encoding="utf-8")
    return 0


def _cmd_split(args):
    from .data import load_dataset, make_splits, save_split

    ratios = tuple(float(tok) for tok in args.ratios.split(","))
    graph = load_dataset(args.data)
    split = make_splits(graph, ratios, _env_seed(args.seed))
    path = save_split(split, args.data)
    log.info("wrote %s", path)
    return 0


def _cmd_train(args):
    from . import baselines, lflf
    from .data import get_split, load_dataset
    from .evaluation import MODEL_KINDS, logistic_readout
    from .modelio import save_model_dir

    if args.model not in MODEL_KINDS:
        raise UsageError(f"--model must be one of {', '.join(MODEL_KINDS)}")
    graph = load_dataset(args.data)
    split = get_split(args.data, graph, args.split)
    overrides = load_model_overrides(args.config, args.set)
    overrides["seed"] = _env_seed(args.seed)
    if args.model in ("mlp", "gcn"):
        cfg = baselines.BaselineConfig(kind=args.model, **overrides)
        trainer = baselines.train_mlp if args.model == "mlp" else baselines.train_gcn
        predictor = trainer(graph, split, cfg)
        save_model_dir(args.out, args.model, dataclasses.asdict(cfg),
                       params={k: p.value for k, p in predictor.params.items()})
    elif args.model == "deepwalk":
        cfg = baselines.BaselineConfig(kind="deepwalk", **overrides)
        emb = baselines.deepwalk_embed(graph, cfg)
        save_model_dir(args.out, "deepwalk", dataclasses.asdict(cfg),
                       embedding=emb)
    else:
        aggregation = "gcn" if args.model == "lflf-gcn" else "sage"
        cfg = lflf.LflfConfig(aggregation=aggregation, **overrides)
        model, z_final, history = lflf.train(graph, split, cfg)
        save_model_dir(args.out, args.model, dataclasses.asdict(cfg),
                       params={k: p.value for k, p in model.params.items()},
                       embedding=z_final)
        log.info("trained %d epochs, final loss %.6f", len(history),
                 history[-1])
    log.info("wrote model to %s", args.out)
    return 0


def _cmd_evaluate(args):
    from . import baselines
    from .data import get_split, load_dataset
    from .evaluation import PredictionSet, evaluate_predictions, logistic_readout
    from .modelio import load_model_dir
    from .numerics import ParamTensor

    graph = load_dataset(args.data)
    split = get_split(args.data, graph, args.split)
    kind, config, params, embedding = load_model_dir(args.model)
    if kind in ("mlp", "gcn"):
        cfg = baselines.BaselineConfig(**config)
        predictor = baselines.SupervisedPredictor(
            kind=kind, config=cfg,
            params={k: ParamTensor(k, v) for k, v in params.items()},
            history=[])
        scores = predictor.predict_proba(graph)[split.test]
        pred = PredictionSet(scores=scores, truth=graph.labels[split.test],
                             node_ids=split.test)
    else:
        if embedding is None:
            raise ValueError(f"{args.model}: model directory has no embedding")
        pred = logistic_readout(embedding, graph, split)
    metrics = evaluate_predictions(pred)
    payload = {"model_dir": str(args.model), "kind": kind,
               "dataset": str(args.data), "split_seed": args.split,
               "metrics": metrics}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True)
                              + "\n", encoding="utf-8")
    return 0


def _cmd_benchmark(args):
    from .evaluation import run_benchmark

    try:
        config = validate_config(args.config)
    except ValueError as exc:
        log.error("invalid benchmark config:\n%s", exc)
        return DATA_ERROR
    out = args.out or config.out
    if not out:
        raise UsageError("no output path: pass --out or set 'out' in the config")
    jobs = args.jobs if args.jobs is not None else config.jobs
    report = run_benchmark(config.models, config.datasets, config.seeds,
                           overrides=config.overrides, jobs=jobs)
    Path(out).write_text(report.to_csv(), encoding="utf-8")
    log.info("wrote %s (%d rows)", out, len(report.rows))
    return 0


def build_parser():
    parser = _Parser(prog="mlgb",
                     description="Multi-label graph benchmarking toolkit")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--labels", type=int, required=True)
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--alpha", type=float, default=8.8)
    p.add_argument("--b", type=float, default=0.12)
    p.add_argument("--target-homophily", type=float, default=None,
                   help="calibrate (alpha, b) to hit this label homophily")
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--min-sphere-radius", type=float, default=0.1)
    p.add_argument("--max-sphere-radius", type=float, default=0.78)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("corrupt", help="replace feature columns with noise")
    p.add_argument("--ratio", type=float, required=True,
                   help="fraction of original feature columns to keep")
    p.add_argument("--irrelevant", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("analyze", help="dataset statistics and CCNS matrix")
    p.add_argument("data", help="dataset directory")
    p.add_argument("--out", default=None, help="stats JSON path (default stdout)")
    p.add_argument("--ccns-out", default=None, help="CCNS CSV path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("split", help="write a train/val/test split file")
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", default="0.6,0.2,0.2")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--model", required=True,
                   help="mlp | gcn | deepwalk | lflf-gcn | lflf-sage")
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=int, required=True, help="split seed")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config option")
    p.add_argument("--seed", type=int, default=None, help="model seed")
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained model directory")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=int, required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="run the model x dataset matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    except SystemExit as exc:  # argparse --help exits on its own
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        level=logging.INFO if args.verbose else logging.WARNING)
    if args.command is None:
        parser.print_help(sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
