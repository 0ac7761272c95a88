"""Command-line front end: embed-export export --manifest M --model ID ..."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_BATCH_SIZE, DEFAULT_MAX_TOKENS, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export pooled transformer embeddings for manifest transcripts",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="write one 768-dim vector per segment")
    p.add_argument("--manifest", required=True, help="segment manifest JSONL")
    p.add_argument("--model", required=True,
                   help="model identifier or local model directory")
    p.add_argument("--pooling", choices=["cls", "mean"], default="cls")
    p.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--out", required=True, help="output embedding JSONL path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(manifest=args.manifest, model_id=args.model, out=args.out,
                    pooling=args.pooling, max_tokens=args.max_tokens,
                    batch_size=args.batch_size)
    try:
        report = export(job)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    n_trunc = len(report["truncated"])
    print(f"wrote {report['segments']} embeddings -> {args.out}"
          + (f" ({n_trunc} truncated, see report)" if n_trunc else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
