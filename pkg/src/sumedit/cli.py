"""Command-line surface: ingest, label, train, summarize, evaluate.

All randomness flows from the single seed in the resolved config; the
EDITNET_WORKERS environment variable bounds parallel labeling workers
(default 1 for bit-reproducibility).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import editor, oracle, text, trainer
from .config import ExperimentConfig


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("EDITNET_WORKERS", "1")))
    except ValueError:
        return 1


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "seed", "out_dir", "epochs", "batch_size", "k", "extractor",
            "abstract_ratio", "encoder_n", "hidden_m", "cap", "lr",
            "train_path", "val_path", "test_path",
        )
    }
    return cfg.apply_overrides(overrides)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    examples, report = text.ingest_dataset(args.input)
    text.write_dataset(examples, args.output)
    summary = {
        "accepted": report.accepted,
        "rejected": report.rejected,
        "reject_reasons": report.reject_reasons,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _dataset_path(cfg: ExperimentConfig, split: str) -> str:
    path = getattr(cfg, f"{split}_path")
    if not path:
        raise SystemExit(f"config has no {split}_path")
    return path


def cmd_label(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    extractor = cfg.make_extractor()
    abstractor = cfg.make_abstractor()
    status = 0
    for split in args.splits:
        examples = text.load_dataset(_dataset_path(cfg, split))
        cache_path = out / f"labels_{split}.jsonl"
        start = time.monotonic()
        labeled, failures = oracle.label_dataset(
            examples,
            extractor,
            abstractor,
            weights=cfg.reward_weights(),
            cap=cfg.cap,
            cache_path=cache_path,
            workers=_workers(),
        )
        elapsed = time.monotonic() - start
        print(
            f"{split}: labeled {len(labeled)}/{len(examples)} in {elapsed:.1f}s "
            f"-> {cache_path}",
            file=sys.stderr,
        )
        for msg in failures:
            print(f"{split}: failed {msg}", file=sys.stderr)
        if not labeled and examples:
            status = 1
    cfg.write(out / "resolved_config.json")
    return status


def _paired_split(cfg: ExperimentConfig, split: str, out: Path):
    cache_path = out / f"labels_{split}.jsonl"
    if not cache_path.exists():
        raise SystemExit(
            f"missing label cache {cache_path}; run `sumedit label --split {split}` first"
        )
    labeled, _ = oracle.read_label_cache(cache_path)
    examples = {ex.document.id: ex for ex in text.load_dataset(_dataset_path(cfg, split))}
    pairs = []
    for lab in labeled:
        if lab.example_id not in examples:
            raise SystemExit(f"cache entry {lab.example_id!r} not found in {split} dataset")
        pairs.append((examples[lab.example_id], lab))
    return pairs


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    train_pairs = _paired_split(cfg, "train", out)
    val_pairs = _paired_split(cfg, "val", out)
    rng = np.random.default_rng(cfg.seed)
    params = editor.init_params(cfg.hidden_m, cfg.encoder_n, rng)
    best, log = trainer.train(
        train_pairs,
        val_pairs,
        cfg.train_config(),
        params,
        cfg.encoder_config(),
        cfg.reward_weights(),
    )
    ckpt_path = out / "checkpoint.json"
    editor.save_checkpoint(best, cfg.encoder_config(), ckpt_path)
    with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry, sort_keys=True, separators=(",", ":")) + "\n")
    cfg.write(out / "resolved_config.json")
    print(f"wrote {ckpt_path}", file=sys.stderr)
    return 0


def cmd_summarize(args) -> int:
    cfg = _load_config(args)
    params, enc_config = editor.load_checkpoint(args.checkpoint)
    abstractor = cfg.make_abstractor()
    if cfg.extractor == "greedy":
        # The greedy extractor scores against the reference, so highlights
        # are required; the lead extractor works on bare articles.
        documents = [ex.document for ex in text.load_dataset(args.document)]
        extracts = [cfg.make_extractor()(ex) for ex in text.load_dataset(args.document)]
    else:
        from .summarizers import extract_lead

        documents = text.load_documents(args.document)
        extracts = [extract_lead(doc, cfg.k) for doc in documents]
    if not documents:
        raise SystemExit(f"no usable records in {args.document}")
    for document, extract in zip(documents, extracts):
        ctx = editor.prepare_context(document, extract, abstractor, enc_config)
        summary = editor.decode(ctx, params)
        print(f"# {document.id}")
        for step in summary.steps:
            if step.tokens is not None:
                print(f"{step.decision.label}: {' '.join(step.tokens)}")
            else:
                struck = " ".join(document.tokens_at(step.sentence_index))
                print(f"{step.decision.label}: {struck}")
        print("summary:")
        for sent in summary.text:
            print("  " + " ".join(sent))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    params, enc_config = editor.load_checkpoint(args.checkpoint)
    pairs = _paired_split(cfg, "test", out)
    report = trainer.evaluate(pairs, params, enc_config, cfg.reward_weights())
    report_path = out / "evaluation.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", dest="out_dir", default=None, help="output directory")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--extractor", choices=["lead", "greedy"], default=None)
    p.add_argument("--abstract-ratio", dest="abstract_ratio", type=float, default=None)
    p.add_argument("--encoder-n", dest="encoder_n", type=int, default=None)
    p.add_argument("--hidden-m", dest="hidden_m", type=int, default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--train-path", dest="train_path", default=None)
    p.add_argument("--val-path", dest="val_path", default=None)
    p.add_argument("--test-path", dest="test_path", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumedit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and canonicalize a dataset")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="precompute soft-label caches")
    _add_common(p)
    p.add_argument(
        "--split",
        dest="splits",
        action="append",
        choices=["train", "val", "test"],
        required=True,
    )
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train the editor")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("summarize", help="decode documents with a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--document", required=True, help="dataset-format file to summarize")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, text.DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
