"""Batch embedding export: manifest transcripts -> pooled encoder vectors.

Pooling is either the classification-token state (default) or the
attention-masked mean over token states.  Inference runs in eval mode
with gradients disabled, so repeated runs on the same machine produce
identical output files.  Transcripts longer than the token limit are
truncated and flagged in a sidecar report next to the output file.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMBEDDING_DIM = 768
POOLING_RULES = ("cls", "mean")
DEFAULT_MAX_TOKENS = 512
DEFAULT_BATCH_SIZE = 16


@dataclass(frozen=True)
class ExportJob:
    manifest: str
    model_id: str
    out: str
    pooling: str = "cls"
    max_tokens: int = DEFAULT_MAX_TOKENS
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.pooling not in POOLING_RULES:
            raise ValueError(f"pooling must be one of {POOLING_RULES}, got {self.pooling!r}")
        if self.max_tokens < 2:
            raise ValueError(f"max_tokens must be >= 2, got {self.max_tokens}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def load_manifest_texts(path) -> list:
    """Read (id, transcript) pairs from a JSONL manifest."""
    rows = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "id" not in row:
                raise ValueError(f"{path}:{lineno}: missing 'id' field")
            seg_id = str(row["id"])
            if seg_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate segment id {seg_id!r}")
            seen.add(seg_id)
            rows.append((seg_id, str(row.get("transcript", ""))))
    if not rows:
        raise ValueError(f"{path}: manifest has no segments")
    return rows


def _load_encoder(model_id: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModel.from_pretrained(model_id)
    model.eval()
    torch.set_grad_enabled(False)
    hidden = getattr(model.config, "hidden_size", None)
    if hidden != EMBEDDING_DIM:
        raise ValueError(
            f"model {model_id!r} has hidden size {hidden}, expected {EMBEDDING_DIM}"
        )
    return tokenizer, model


def _pool(hidden_states, attention_mask, rule: str):
    if rule == "cls":
        return hidden_states[:, 0]
    mask = attention_mask.unsqueeze(-1).to(hidden_states.dtype)
    summed = (hidden_states * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return summed / counts


def export(job: ExportJob) -> dict:
    """Run the export; returns the sidecar report dict.

    Writes one JSONL row {id, vec} per manifest segment to job.out and a
    report (truncated / empty segments) to job.out + '.report.json'.
    """
    import torch

    rows = load_manifest_texts(job.manifest)
    tokenizer, model = _load_encoder(job.model_id)

    vectors: dict = {}
    truncated = []
    empty = []
    pending = []  # (seg_id, text) needing inference
    for seg_id, text in rows:
        if not text.strip():
            vectors[seg_id] = np.zeros(EMBEDDING_DIM)
            empty.append(seg_id)
            print(f"warning: segment {seg_id!r} has an empty transcript, "
                  f"writing a zero vector", file=sys.stderr)
            continue
        n_tokens = len(tokenizer(text, add_special_tokens=True)["input_ids"])
        if n_tokens > job.max_tokens:
            truncated.append({"id": seg_id, "tokens": n_tokens,
                              "limit": job.max_tokens})
        pending.append((seg_id, text))

    for start in range(0, len(pending), job.batch_size):
        chunk = pending[start : start + job.batch_size]
        encoded = tokenizer([text for _, text in chunk], padding=True,
                            truncation=True, max_length=job.max_tokens,
                            return_tensors="pt")
        output = model(**encoded)
        pooled = _pool(output.last_hidden_state, encoded["attention_mask"],
                       job.pooling)
        pooled = pooled.to(torch.float64).cpu().numpy()
        for (seg_id, _), vec in zip(chunk, pooled):
            vectors[seg_id] = vec

    out_path = Path(job.out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for seg_id, _ in rows:  # manifest order
            fh.write(json.dumps({"id": seg_id,
                                 "vec": vectors[seg_id].tolist()}) + "\n")

    report = {
        "manifest": str(job.manifest),
        "model": job.model_id,
        "pooling": job.pooling,
        "max_tokens": job.max_tokens,
        "segments": len(rows),
        "truncated": truncated,
        "empty_transcripts": empty,
    }
    report_path = Path(str(out_path) + ".report.json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    return report
