"""Batch command-line front end for the extraction/training pipeline.

Subcommands: extract, train, crossval, gridsearch, eval, labelstats,
segment.  A JSON config file may supply any flag; explicit flags win.
Every artifact embeds the resolved configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, audio_dsp, dataset, fusion, mfcc as mfcc_mod, text_features
from .featurestore import load_feature_store, write_feature_store

SAMPLE_RATES = (22050, 16000, 11000)


# per-subcommand flag defaults, recorded while building the parser; a config
# file value only applies where the flag still holds its default (flags win)
_SUBCOMMAND_DEFAULTS: dict = {}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the --config JSON file (flags win on conflict)."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        file_values = json.load(fh)
    defaults = _SUBCOMMAND_DEFAULTS.get(args.command, {})
    for key, value in file_values.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            continue
        if getattr(args, key) == defaults.get(key):
            setattr(args, key, value)
    return args


def _resolved_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    cfg["version"] = __version__
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(cfg.items())}


def _train_config(args: argparse.Namespace) -> fusion.TrainConfig:
    return fusion.TrainConfig(
        hidden_layers=args.hidden_layers,
        dropout=args.dropout,
        hidden_nodes=args.hidden_nodes,
        activation=args.activation,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        branches=tuple(args.branches),
        strict_time_only=args.strict_paper,
        allow_off_grid=args.allow_off_grid,
    )


# -- extract ------------------------------------------------------------------

def cmd_extract(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    lexicon = (text_features.load_lexicon(args.lexicon) if args.lexicon
               else text_features.default_lexicon())
    embeddings = text_features.load_embeddings(args.embeddings) if args.embeddings else None
    frame_cfg = audio_dsp.FrameConfig.for_rate(args.sample_rate)
    mfcc_cfg = mfcc_mod.MfccConfig(n_mels=args.n_mels, n_coeffs=args.n_coeffs,
                                   include_deltas=not args.no_deltas)
    errors = []
    rows = []
    category_vectors = []
    for rec in manifest:
        try:
            clip = audio_dsp.read_wav(rec.audio_path)
            if clip.sample_rate != args.sample_rate:
                clip = audio_dsp.resample(clip, args.sample_rate)
            time_vec = audio_dsp.extract_time_summary(clip, frame_cfg)
            spectral_vec = audio_dsp.extract_spectral_summary(clip, frame_cfg,
                                                              args.split_hz)
            mfcc_matrix = mfcc_mod.mfcc(clip, frame_cfg, mfcc_cfg)
            tokens = text_features.tokenize(rec.transcript)
            category_vectors.append(text_features.category_counts(tokens, lexicon))
            if embeddings is not None:
                if rec.segment_id not in embeddings:
                    raise ValueError(f"no embedding for segment {rec.segment_id!r}")
                embedding = embeddings[rec.segment_id].vector
            else:
                embedding = text_features.hash_embedding(rec.transcript)
            aggregated = dataset.aggregate_scores(rec.reviewer_scores, args.aggregation)
            rows.append({
                "id": rec.segment_id,
                "label": dataset.binarize(aggregated, args.threshold),
                "aggregated_label": aggregated,
                "time": time_vec,
                "spectral": spectral_vec,
                "mfcc": mfcc_matrix,
                "embedding": embedding,
            })
        except Exception as exc:  # noqa: BLE001 - per-segment error reporting
            errors.append({"id": rec.segment_id, "error": str(exc)})
    if rows:
        liwc_matrix = np.stack([cv.proportions for cv in category_vectors])
        if liwc_matrix.shape[0] >= 2:
            pca = text_features.pca_fit(liwc_matrix, args.variance_target)
            reduced = text_features.pca_transform(pca, liwc_matrix)
        else:
            reduced = liwc_matrix
        for row, liwc_vec in zip(rows, reduced):
            row["liwc"] = liwc_vec
        write_feature_store(args.out, rows, _resolved_config(args))
    if errors:
        for err in errors:
            print(f"ERROR {err['id']}: {err['error']}", file=sys.stderr)
        error_file = Path(args.out) / "errors.jsonl"
        error_file.parent.mkdir(parents=True, exist_ok=True)
        with open(error_file, "w", encoding="utf-8") as fh:
            for err in errors:
                fh.write(json.dumps(err) + "\n")
        return 1
    print(f"extracted {len(rows)} segments -> {args.out}")
    return 0


# -- training / evaluation ----------------------------------------------------

def _write_metrics_csv(path, fold_metrics) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "precision", "recall", "f1", "accuracy",
                         "tp", "fp", "fn", "tn"])
        for i, m in enumerate(fold_metrics):
            writer.writerow([i, m.precision, m.recall, m.f1, m.accuracy,
                             m.tp, m.fp, m.fn, m.tn])


def _write_curves_csv(path, histories) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "epoch", "train_loss", "train_acc",
                         "val_loss", "val_acc"])
        for fold_no, history in enumerate(histories):
            for rec in history:
                writer.writerow([fold_no, rec["epoch"], rec["train_loss"],
                                 rec["train_acc"], rec["val_loss"], rec["val_acc"]])


def _write_attention_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_id", "weights"])
        for seg_id, weights in rows:
            writer.writerow([seg_id, " ".join(f"{w:.10g}" for w in weights)])


def cmd_train(args) -> int:
    bundles, labels, _ = load_feature_store(args.store)
    cfg = _train_config(args)
    model = fusion.FusionModel(cfg, **fusion._infer_dims(bundles, cfg))
    history = fusion.train(model, bundles, labels, epochs_override=args.epochs_override)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fusion.save_checkpoint(model, out / "model.json")
    _write_curves_csv(out / "learning_curves.csv", [history])
    (out / "run_config.json").write_text(
        json.dumps(_resolved_config(args), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    print(f"trained model -> {out / 'model.json'}")
    return 0


def cmd_crossval(args) -> int:
    bundles, labels, _ = load_feature_store(args.store)
    cfg = _train_config(args)
    result = fusion.cross_validate(bundles, labels, cfg, k=args.folds,
                                   epochs_override=args.epochs_override)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_metrics_csv(out / "fold_metrics.csv", result["fold_metrics"])
    _write_curves_csv(out / "learning_curves.csv", result["histories"])
    if "a" in cfg.branches:
        attention_rows = []
        model = fusion.FusionModel(cfg, **fusion._infer_dims(bundles, cfg))
        fusion.train(model, bundles, labels, epochs_override=args.epochs_override)
        for start in range(0, len(bundles), 256):
            chunk = bundles[start : start + 256]
            output = model.forward(chunk, train=False)
            for b, weights in zip(chunk, output["attention_weights"]):
                attention_rows.append((b.segment_id, weights))
        _write_attention_csv(out / "attention_weights.csv", attention_rows)
    summary = {
        "mean_f1": result["mean_f1"],
        "fold_f1": [m.f1 for m in result["fold_metrics"]],
        "config": _resolved_config(args),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    print(f"mean F1 over {args.folds} folds: {result['mean_f1']:.4f}")
    for i, m in enumerate(result["fold_metrics"]):
        print(f"  fold {i}: F1={m.f1:.4f}")
    return 0


def cmd_gridsearch(args) -> int:
    bundles, labels, _ = load_feature_store(args.store)
    cfg = _train_config(args)
    grid = None
    if args.grid:
        with open(args.grid, encoding="utf-8") as fh:
            grid = json.load(fh)
    results = fusion.grid_search(bundles, labels, cfg, grid=grid, k=args.folds,
                                 epochs_override=args.epochs_override)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"config": _resolved_config(args), "results": results}
    (out / "grid_results.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    best = results[0]
    print(f"evaluated {len(results)} configurations; best mean F1 "
          f"{best['mean_f1']:.4f} with {best['config']}")
    return 0


def cmd_eval(args) -> int:
    bundles, labels, _ = load_feature_store(args.store)
    model = fusion.load_checkpoint(args.checkpoint)
    metrics = fusion.evaluate(model, bundles, labels)
    payload = {"metrics": metrics.as_dict(), "config": _resolved_config(args)}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(metrics.as_dict(), indent=2))
    return 0


def cmd_labelstats(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    anova = dataset.reviewer_anova(manifest)
    balance = dataset.class_balance(manifest, rule=args.aggregation,
                                    threshold=args.threshold)
    print("reviewer agreement (one-way ANOVA):")
    print(f"  F = {anova['F']:.6g}, p = {anova['p_value']:.6g}")
    for i, (mean, std) in enumerate(zip(anova["group_means"], anova["group_stds"]), 1):
        print(f"  reviewer {i}: mean {mean:.4f}, std {std:.4f}")
    print("class balance:")
    print(f"  violent {balance['violent']} ({balance['violent_proportion']:.4f}), "
          f"non-violent {balance['non_violent']} "
          f"({balance['non_violent_proportion']:.4f})")
    for source, counts in sorted(balance["per_source"].items()):
        print(f"  {source}: {counts['violent']} / {counts['non_violent']}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"anova": anova, "class_balance": balance,
                   "config": _resolved_config(args)}
        (out / "labelstats.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_segment(args) -> int:
    clip = audio_dsp.read_wav(args.wav)
    chunks = dataset.segment_audio(clip, args.duration)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not chunks:
        print(f"warning: clip shorter than {args.duration}s, no segments written",
              file=sys.stderr)
        return 0
    stem = Path(args.wav).stem
    for i, chunk in enumerate(chunks):
        audio_dsp.write_wav(out / f"{stem}_{i:04d}.wav", chunk)
    print(f"wrote {len(chunks)} segments -> {out}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtfusion",
        description="Multimodal audio-text violence detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file supplying any flag")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")

    def train_flags(p):
        p.add_argument("--store", required=True, help="feature store directory")
        p.add_argument("--branches", default="abcd",
                       help="enabled branches, subset of 'abcd'")
        p.add_argument("--hidden-layers", type=int, default=3)
        p.add_argument("--dropout", type=float, default=0.5)
        p.add_argument("--hidden-nodes", type=int, default=128)
        p.add_argument("--activation", default="relu", choices=["relu", "linear"])
        p.add_argument("--learning-rate", type=float, default=6.25e-4)
        p.add_argument("--epochs", type=int, default=1)
        p.add_argument("--epochs-override", type=int, default=None,
                       help="train for this many epochs regardless of the grid")
        p.add_argument("--allow-off-grid", action="store_true")
        p.add_argument("--strict-paper", action="store_true",
                       help="branch b uses only the 30-dim time summary")

    p = sub.add_parser("extract", help="extract per-segment feature bundles")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--sample-rate", type=int, default=22050, choices=SAMPLE_RATES)
    p.add_argument("--split-hz", type=float, default=audio_dsp.DEFAULT_SPLIT_HZ)
    p.add_argument("--n-mels", type=int, default=26)
    p.add_argument("--n-coeffs", type=int, default=13)
    p.add_argument("--no-deltas", action="store_true")
    p.add_argument("--lexicon", help="lexicon file (default: built-in stand-in)")
    p.add_argument("--embeddings", help="embedding JSONL (default: hash embedding)")
    p.add_argument("--variance-target", type=float,
                   default=text_features.DEFAULT_VARIANCE_TARGET)
    p.add_argument("--aggregation", default="mean",
                   choices=dataset.AGGREGATION_RULES)
    p.add_argument("--threshold", type=float,
                   default=dataset.DEFAULT_BINARIZE_THRESHOLD)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a fusion model on a feature store")
    common(p)
    train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    common(p)
    train_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("gridsearch", help="hyperparameter grid sweep")
    common(p)
    train_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--grid", help="JSON file with grid domains (default: full grid)")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a feature store")
    p.add_argument("--config", help="JSON config file supplying any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--store", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("labelstats", help="reviewer ANOVA and class balance")
    p.add_argument("--config", help="JSON config file supplying any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--aggregation", default="mean", choices=dataset.AGGREGATION_RULES)
    p.add_argument("--threshold", type=float,
                   default=dataset.DEFAULT_BINARIZE_THRESHOLD)
    p.set_defaults(func=cmd_labelstats)

    p = sub.add_parser("segment", help="split a WAV into fixed-length chunks")
    common(p)
    p.add_argument("--wav", required=True)
    p.add_argument("--duration", type=float, default=dataset.DEFAULT_SEGMENT_SECONDS)
    p.set_defaults(func=cmd_segment)

    for name, subparser in sub.choices.items():
        _SUBCOMMAND_DEFAULTS[name] = {
            action.dest: action.default for action in subparser._actions
        }
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _resolve(args)
    if hasattr(args, "branches") and isinstance(args.branches, str):
        args.branches = tuple(args.branches)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
