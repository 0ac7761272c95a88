"""Synthetic data generators for harness sanity checks.

Feature-level bundles with distinct class means in every modality (for
optimization and ablation checks), and a small on-disk WAV + manifest
corpus for exercising the extraction pipeline end to end.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .audio_dsp import AudioClip, write_wav
from .fusion import EMBEDDING_DIM, SPECTRAL_DIM, TIME_DIM, FeatureBundle


def make_separable_bundles(n: int = 200, seed: int = 0, liwc_dim: int = 6,
                           mfcc_shape: tuple = (13, 24),
                           separation: float = 2.0) -> tuple:
    """Two-class multimodal bundles whose class means differ in all four
    modalities.  Returns (bundles, labels) with a near-balanced split."""
    rng = np.random.default_rng(seed)
    means = {}
    for cls in (0, 1):
        means[cls] = {
            "time": rng.normal(0.0, 1.0, TIME_DIM),
            "spectral": rng.normal(0.0, 1.0, SPECTRAL_DIM),
            "mfcc": rng.normal(0.0, 1.0, mfcc_shape),
            "liwc": rng.normal(0.0, 1.0, liwc_dim),
            "embedding": rng.normal(0.0, 1.0, EMBEDDING_DIM),
        }
    # push the class means apart by the requested separation
    for key in means[0]:
        direction = means[1][key] - means[0][key]
        norm = np.linalg.norm(direction)
        if norm > 0:
            means[1][key] = means[0][key] + direction / norm * separation
    labels = np.array([i % 2 for i in range(n)], dtype=np.int64)
    bundles = []
    for i, cls in enumerate(labels):
        m = means[int(cls)]
        bundles.append(FeatureBundle(
            segment_id=f"syn{i:04d}",
            time_vec=m["time"] + rng.normal(0.0, 0.5, TIME_DIM),
            spectral_vec=m["spectral"] + rng.normal(0.0, 0.5, SPECTRAL_DIM),
            mfcc=m["mfcc"] + rng.normal(0.0, 0.5, mfcc_shape),
            liwc_vec=m["liwc"] + rng.normal(0.0, 0.5, liwc_dim),
            embedding=m["embedding"] + rng.normal(0.0, 0.5, EMBEDDING_DIM),
        ))
    return bundles, labels


_CALM_WORDS = ("maybe we could go for a walk later today",
               "i will put the kettle on for some tea",
               "thanks for coming over it was lovely to see you")
_TENSE_WORDS = ("take your hands off me i hate this shouting",
                "stop screaming you are scaring everyone i am afraid",
                "do not hit him again or i will call for help")


def make_demo_corpus(outdir, n_segments: int = 12, seed: int = 0,
                     sample_rate: int = 22050, duration: float = 1.5) -> Path:
    """Write a tiny synthetic corpus: WAV files plus a JSONL manifest.

    Violent segments get noisier, louder audio and tense transcripts;
    reviewer scores track the class.  Returns the manifest path.
    """
    out = Path(outdir)
    audio_dir = out / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_samples = int(duration * sample_rate)
    t = np.arange(n_samples) / sample_rate
    rows = []
    for i in range(n_segments):
        violent = i % 2
        seg_id = f"seg{i:03d}"
        if violent:
            freq = rng.uniform(400, 900)
            signal = 0.6 * np.sin(2 * np.pi * freq * t) + 0.3 * rng.standard_normal(n_samples)
            text = _TENSE_WORDS[i % len(_TENSE_WORDS)]
            scores = [int(rng.integers(2, 6)) for _ in range(3)]
        else:
            freq = rng.uniform(100, 250)
            signal = 0.2 * np.sin(2 * np.pi * freq * t) + 0.02 * rng.standard_normal(n_samples)
            text = _CALM_WORDS[i % len(_CALM_WORDS)]
            scores = [int(rng.integers(0, 2)) for _ in range(3)]
        signal = np.clip(signal, -1.0, 1.0)
        wav_path = audio_dir / f"{seg_id}.wav"
        write_wav(wav_path, AudioClip(samples=signal, sample_rate=sample_rate))
        rows.append({
            "id": seg_id,
            "audio_path": str(wav_path),
            "transcript": text,
            "r1": scores[0], "r2": scores[1], "r3": scores[2],
            "source": "synthetic",
        })
    manifest_path = out / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return manifest_path
