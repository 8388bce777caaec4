"""Batch command-line interface.

Subcommands: extract, analyze, train, evaluate, predict, ablate. Every
command takes --out (output directory), most take --config (key = value
text mirroring TrainConfig field names) and --seed (overrides the config
seed); the effective configuration is echoed into every output directory
as config.txt, so a run is reproducible from its own outputs.

Exit codes: 0 success, 1 numeric/runtime failure, 2 input or config error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

from .dataio import (LabeledDataset, apply_normalization, label_and_cap_users,
                     load_features, load_model, load_reviews,
                     load_reviews_delimited, load_spam_scores, normalize,
                     save_features, save_model, split_shuffle_batch)
from .errors import (ConfigError, ModelIntegrityError, ModelVersionError,
                     NumericError, ParseError)
from .features import SCOPES, FeatureMatrix, build_feature_matrix
from .metrics import compute_metrics, confusion, write_metrics_report
from .stats import screen_features, write_histograms, write_screening_report
from .training import Model, TrainConfig, predict, train

__all__ = ["main", "run_ablation", "load_config_file"]

_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False,
                 "yes": True, "no": False}

_CONFIG_FIELDS = {f.name: f.type for f in
                  __import__("dataclasses").fields(TrainConfig)}


def load_config_file(path) -> dict:
    """Parse ``key = value`` lines (# comments allowed) into config kwargs."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", ln)
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_FIELDS:
                raise ParseError(f"unknown config key {key!r}", ln)
            values[key] = _parse_config_value(key, raw, ln)
    return values


def _parse_config_value(key: str, raw: str, ln: int):
    if raw.lower() in ("none", ""):
        return None
    if key in ("normalization",):
        return raw
    if key in ("reshuffle_each_epoch",):
        if raw.lower() not in _BOOL_STRINGS:
            raise ParseError(f"{key} must be true/false, got {raw!r}", ln)
        return _BOOL_STRINGS[raw.lower()]
    if key == "ae_widths":
        try:
            return tuple(int(p) for p in raw.split(",") if p.strip())
        except ValueError:
            raise ParseError(f"{key} must be comma-separated integers", ln) from None
    try:
        if key in ("learning_rate", "leaf_learning_rate", "epsilon", "init_scale"):
            return float(raw)
        return int(raw)
    except ValueError:
        raise ParseError(f"invalid value {raw!r} for {key}", ln) from None


def _resolve_config(args) -> TrainConfig:
    values = load_config_file(args.config) if args.config else {}
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    return TrainConfig(**values)


def _echo_config(out_dir, command: str, config: TrainConfig | None, extras: dict):
    os.makedirs(out_dir, exist_ok=True)
    lines = [f"command = {command}"]
    if config is not None:
        for key, val in sorted(config.to_dict().items()):
            if isinstance(val, list):
                val = ",".join(str(v) for v in val)
            lines.append(f"{key} = {val}")
    for key, val in sorted(extras.items()):
        lines.append(f"{key} = {val}")
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Commands


def cmd_extract(args) -> int:
    loader = load_reviews_delimited if args.delimited else load_reviews
    records = loader(args.reviews)
    scores = load_spam_scores(args.scores)
    seed = args.seed if args.seed is not None else 0
    capped, row_labels, _ = label_and_cap_users(records, scores,
                                                cap=args.cap, seed=seed)
    matrix, user_ids = build_feature_matrix(capped)
    save_features(args.out, matrix, row_labels, user_ids)
    _echo_config(args.out, "extract", None,
                 {"cap": args.cap, "seed": seed, "reviews": args.reviews,
                  "scores": args.scores})
    print(f"wrote {matrix.n_rows} rows x {matrix.n_features} features to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    ds = load_features(args.features)
    results = screen_features(ds.features, ds.labels, paired_mode=args.paired)
    os.makedirs(args.out, exist_ok=True)
    report = os.path.join(args.out, "screening.tsv")
    write_screening_report(results, report)
    if args.histograms:
        write_histograms(ds.features, ds.labels,
                         os.path.join(args.out, "histograms"))
    _echo_config(args.out, "analyze", None,
                 {"features": args.features, "paired": args.paired})
    n_sig = sum(r.significant_at_05 for r in results)
    print(f"screened {len(results)} features, {n_sig} significant at 0.05; "
          f"report at {report}")
    return 0


def _split_dataset(ds: LabeledDataset, train_count: int, seed: int):
    # One batch of size train_count: just reusing the seeded permutation split.
    batches, test_idx = split_shuffle_batch(ds.n_rows, train_count,
                                            train_count, seed)
    return batches[0], test_idx


def cmd_train(args) -> int:
    ds = load_features(args.features)
    config = _resolve_config(args)
    train_count = args.train_count if args.train_count else ds.n_rows
    if train_count > ds.n_rows:
        raise ConfigError(
            f"train_count {train_count} exceeds {ds.n_rows} feature rows")

    train_idx, test_idx = _split_dataset(ds, train_count, config.seed)
    train_matrix = FeatureMatrix(ds.features.values[train_idx],
                                 list(ds.features.names),
                                 list(ds.features.scopes),
                                 list(ds.features.kinds),
                                 ds.features.manifest_version)
    normed, stats = normalize(train_matrix, config.normalization)

    os.makedirs(args.out, exist_ok=True)
    log_path = os.path.join(args.out, "training_log.tsv")
    result = train(normed.values, ds.labels[train_idx], config, log_path=log_path)
    result.model.norm_stats = stats
    result.model.manifest_version = ds.features.manifest_version
    model_path = os.path.join(args.out, "model.json")
    save_model(model_path, result.model)

    if len(test_idx) > 0:
        heldout = FeatureMatrix(ds.features.values[test_idx],
                                list(ds.features.names),
                                list(ds.features.scopes),
                                list(ds.features.kinds),
                                ds.features.manifest_version)
        save_features(os.path.join(args.out, "heldout"), heldout,
                      ds.labels[test_idx], [ds.user_ids[i] for i in test_idx])

    _echo_config(args.out, "train", config,
                 {"features": args.features, "train_count": train_count})
    final = result.accuracies[-1] if result.accuracies else float("nan")
    print(f"trained {config.n_epoch} epochs; final training accuracy "
          f"{final:.4f}; model at {model_path}")
    return 0


def _load_and_normalize(features_dir, model: Model) -> LabeledDataset:
    ds = load_features(features_dir)
    if (model.manifest_version is not None
            and model.manifest_version != ds.features.manifest_version):
        raise ModelVersionError(
            f"model was trained against manifest version {model.manifest_version}, "
            f"features carry {ds.features.manifest_version}")
    if model.norm_stats is not None:
        matrix = apply_normalization(ds.features, model.norm_stats)
    else:
        matrix = ds.features
    return LabeledDataset(matrix, ds.labels, ds.user_ids)


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    ds = _load_and_normalize(args.features, model)
    labels, _ = predict(model, ds.features.values)
    counts = confusion(labels, ds.labels, positive_class=args.positive_class)
    metrics = compute_metrics(counts)
    os.makedirs(args.out, exist_ok=True)
    report = os.path.join(args.out, "metrics.txt")
    write_metrics_report(metrics, report)
    _echo_config(args.out, "evaluate", None,
                 {"features": args.features, "model": args.model,
                  "positive_class": args.positive_class})
    print(f"accuracy {metrics.accuracy*100:.2f}%  precision {metrics.precision*100:.2f}%  "
          f"recall {metrics.recall*100:.2f}%  f1 {metrics.f1*100:.2f}%")
    print(f"report at {report}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    ds = _load_and_normalize(args.features, model)
    labels, probs = predict(model, ds.features.values)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "predictions.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row\tuser_id\tlabel\tp_spam\n")
        for i, (uid, lab) in enumerate(zip(ds.user_ids, labels)):
            fh.write(f"{i}\t{uid}\t{int(lab)}\t{float(probs[i, 1])!r}\n")
    _echo_config(args.out, "predict", None,
                 {"features": args.features, "model": args.model})
    print(f"wrote {len(labels)} predictions to {path}")
    return 0


def run_ablation(ds: LabeledDataset, config: TrainConfig, train_count: int):
    """Train one model per feature scope plus the full set, shared seed.

    Returns rows ``(scope, n_features, accuracy, is_reference)``; accuracy
    is measured on the held-out rows when ``train_count`` leaves any,
    otherwise on the training rows. Scopes without features are skipped
    with a warning.
    """
    train_idx, test_idx = _split_dataset(ds, train_count, config.seed)
    eval_idx = test_idx if len(test_idx) > 0 else train_idx

    def run_subset(cols):
        sub = FeatureMatrix(ds.features.values[:, cols],
                            [ds.features.names[c] for c in cols],
                            [ds.features.scopes[c] for c in cols],
                            [ds.features.kinds[c] for c in cols],
                            ds.features.manifest_version)
        train_part = FeatureMatrix(sub.values[train_idx], list(sub.names),
                                   list(sub.scopes), list(sub.kinds),
                                   sub.manifest_version)
        normed, stats = normalize(train_part, config.normalization)
        result = train(normed.values, ds.labels[train_idx], config)
        eval_matrix = FeatureMatrix(sub.values[eval_idx], list(sub.names),
                                    list(sub.scopes), list(sub.kinds),
                                    sub.manifest_version)
        eval_normed = apply_normalization(eval_matrix, stats)
        labels, _ = predict(result.model, eval_normed.values)
        return float((labels == ds.labels[eval_idx]).mean())

    rows = []
    for scope in SCOPES:
        cols = ds.features.columns_for_scope(scope)
        if not cols:
            warnings.warn(f"scope {scope!r} has no features; skipped")
            continue
        rows.append((scope, len(cols), run_subset(cols), False))
    rows.append(("full", ds.features.n_features,
                 run_subset(list(range(ds.features.n_features))), True))
    return rows


def cmd_ablate(args) -> int:
    ds = load_features(args.features)
    config = _resolve_config(args)
    train_count = args.train_count if args.train_count else ds.n_rows
    if train_count > ds.n_rows:
        raise ConfigError(
            f"train_count {train_count} exceeds {ds.n_rows} feature rows")
    rows = run_ablation(ds, config, train_count)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "ablation.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scope\tn_features\taccuracy\treference\n")
        for scope, n_feat, acc, ref in rows:
            fh.write(f"{scope}\t{n_feat}\t{float(acc)!r}\t{'yes' if ref else 'no'}\n")
    _echo_config(args.out, "ablate", config,
                 {"features": args.features, "train_count": train_count})
    for scope, n_feat, acc, ref in rows:
        marker = " (reference)" if ref else ""
        print(f"{scope:10s} {n_feat:4d} features  accuracy {acc:.4f}{marker}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spamforest",
        description="Review-spam detection: feature extraction, screening, "
                    "training, evaluation, prediction, ablation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--seed", type=int, help="seed override")

    p = sub.add_parser("extract", help="compute features from raw reviews")
    common(p)
    p.add_argument("--reviews", required=True, help="review file (JSON lines)")
    p.add_argument("--scores", required=True, help="user_id<TAB>score file")
    p.add_argument("--cap", type=int, default=20,
                   help="max reviews kept per user (default 20)")
    p.add_argument("--delimited", action="store_true",
                   help="reviews file is delimited text with a header row")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze", help="screen features against labels")
    common(p)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--histograms", action="store_true",
                   help="also write per-feature histogram CSVs")
    p.add_argument("--paired", action="store_true",
                   help="use the paired signed-rank test on trimmed groups")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train a model on a feature directory")
    common(p)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--train-count", type=int, dest="train_count",
                   help="rows used for training; the rest are written to "
                        "<out>/heldout (default: all rows)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confusion metrics of a model on features")
    common(p)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--positive-class", type=int, default=1, dest="positive_class",
                   choices=(0, 1), help="label treated as positive (default 1)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="per-row labels and probabilities")
    common(p)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--model", required=True, help="model file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="accuracy per feature scope plus full set")
    common(p)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--train-count", type=int, dest="train_count",
                   help="rows used for training (default: all rows)")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except (ParseError, ConfigError, ModelVersionError, ModelIntegrityError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
