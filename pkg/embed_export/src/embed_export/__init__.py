"""Offline transcript embedding export tool.

Reads a segment manifest (JSONL with id and transcript fields), runs the
transcripts through a transformer encoder and writes one 768-dim pooled
vector per segment in the pipeline's embedding JSONL format.
"""

__version__ = "0.1.0"

from .exporter import ExportJob, export, load_manifest_texts  # noqa: F401
