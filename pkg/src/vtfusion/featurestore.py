"""On-disk feature store: JSONL metadata plus raw float64 matrix files.

Vectors (time/frequency summaries, lexicon-PCA, embedding) live inline in
features.jsonl; MFCC matrices are little-endian 64-bit float files under
arrays/, keyed by segment id, with their shape recorded in the metadata.
Writes are deterministic so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fusion import FeatureBundle

FEATURES_FILE = "features.jsonl"
ARRAYS_DIR = "arrays"
CONFIG_FILE = "config.json"


def write_feature_store(outdir, entries: list, config: dict) -> None:
    """Persist per-segment feature entries and the resolved run config.

    Each entry: {id, label, aggregated_label, time, spectral, liwc|None,
    embedding|None, mfcc (2-D array)}.
    """
    out = Path(outdir)
    arrays = out / ARRAYS_DIR
    arrays.mkdir(parents=True, exist_ok=True)
    rows = []
    for entry in entries:
        seg_id = entry["id"]
        mfcc = np.asarray(entry["mfcc"], dtype="<f8")
        mfcc_file = arrays / f"{seg_id}.mfcc.f64"
        mfcc_file.write_bytes(mfcc.tobytes())
        rows.append({
            "id": seg_id,
            "label": entry["label"],
            "aggregated_label": entry["aggregated_label"],
            "time": [float(v) for v in entry["time"]],
            "spectral": [float(v) for v in entry["spectral"]],
            "liwc": None if entry.get("liwc") is None
                    else [float(v) for v in entry["liwc"]],
            "embedding": None if entry.get("embedding") is None
                         else [float(v) for v in entry["embedding"]],
            "mfcc": {"file": f"{ARRAYS_DIR}/{seg_id}.mfcc.f64",
                     "shape": list(mfcc.shape)},
        })
    with open(out / FEATURES_FILE, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    with open(out / CONFIG_FILE, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_feature_store(store_dir) -> tuple:
    """Load a feature store back into (bundles, labels, config)."""
    store = Path(store_dir)
    bundles = []
    labels = []
    with open(store / FEATURES_FILE, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            shape = tuple(row["mfcc"]["shape"])
            raw = (store / row["mfcc"]["file"]).read_bytes()
            mfcc = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            bundles.append(FeatureBundle(
                segment_id=row["id"],
                time_vec=np.asarray(row["time"], dtype=np.float64),
                spectral_vec=np.asarray(row["spectral"], dtype=np.float64),
                mfcc=mfcc,
                liwc_vec=None if row["liwc"] is None
                         else np.asarray(row["liwc"], dtype=np.float64),
                embedding=None if row["embedding"] is None
                          else np.asarray(row["embedding"], dtype=np.float64),
            ))
            labels.append(int(row["label"]))
    config = {}
    config_path = store / CONFIG_FILE
    if config_path.exists():
        config = json.loads(config_path.read_text(encoding="utf-8"))
    return bundles, np.asarray(labels, dtype=np.int64), config
