"""Segment manifest handling: segmentation, label aggregation, statistics.

Each segment carries a transcript and three 0-5 Likert reviewer scores;
the aggregated label is binarized into violent / non-violent.  Reviewer
agreement is quantified with a one-way ANOVA over the three score columns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import f as f_dist

from .audio_dsp import AudioClip

LIKERT_MIN = 0
LIKERT_MAX = 5
DEFAULT_SEGMENT_SECONDS = 10.0
DEFAULT_BINARIZE_THRESHOLD = 1.0
AGGREGATION_RULES = ("mean", "max", "majority")


@dataclass(frozen=True)
class SegmentRecord:
    segment_id: str
    audio_path: str
    transcript: str
    reviewer_scores: tuple
    source: str = ""

    def __post_init__(self):
        if len(self.reviewer_scores) != 3:
            raise ValueError(
                f"segment {self.segment_id!r}: expected 3 reviewer scores, "
                f"got {len(self.reviewer_scores)}"
            )
        for s in self.reviewer_scores:
            if not LIKERT_MIN <= s <= LIKERT_MAX:
                raise ValueError(
                    f"segment {self.segment_id!r}: score {s} outside "
                    f"[{LIKERT_MIN}, {LIKERT_MAX}]"
                )


@dataclass(frozen=True)
class Manifest:
    records: tuple
    segment_seconds: float = DEFAULT_SEGMENT_SECONDS
    notes: str = ""

    def __post_init__(self):
        ids = [r.segment_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate segment ids: {dupes}")
        if self.segment_seconds <= 0:
            raise ValueError("segment duration must be positive")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def load_manifest(path, segment_seconds: float = DEFAULT_SEGMENT_SECONDS) -> Manifest:
    """Load a JSONL manifest: one {id, audio_path, transcript, r1, r2, r3} per line."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            try:
                records.append(SegmentRecord(
                    segment_id=str(row["id"]),
                    audio_path=str(row.get("audio_path", "")),
                    transcript=str(row.get("transcript", "")),
                    reviewer_scores=(int(row["r1"]), int(row["r2"]), int(row["r3"])),
                    source=str(row.get("source", "")),
                ))
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
    return Manifest(records=tuple(records), segment_seconds=segment_seconds)


def export_manifest_csv(manifest: Manifest, path, rule: str = "mean") -> None:
    """CSV mirror of the annotation table: ID, Transcript, R1, R2, R3, Label."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ID", "Transcript", "R1", "R2", "R3", "Label"])
        for rec in manifest:
            label = aggregate_scores(rec.reviewer_scores, rule)
            writer.writerow([rec.segment_id, rec.transcript, *rec.reviewer_scores, label])


def segment_audio(clip: AudioClip, duration: float = DEFAULT_SEGMENT_SECONDS) -> list:
    """Split a clip into consecutive non-overlapping chunks of `duration`.

    A final partial chunk is discarded; a clip shorter than one chunk
    yields an empty list.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    chunk = int(round(duration * clip.sample_rate))
    n_chunks = len(clip) // chunk
    return [
        AudioClip(samples=clip.samples[i * chunk : (i + 1) * chunk],
                  sample_rate=clip.sample_rate)
        for i in range(n_chunks)
    ]


def aggregate_scores(scores, rule: str = "mean") -> float:
    """Combine the three reviewer scores into one label.

    mean: arithmetic mean.  max: highest score.  majority: the modal score
    when one occurs at least twice, otherwise the median of the three.
    """
    if len(scores) != 3:
        raise ValueError(f"expected 3 scores, got {len(scores)}")
    for s in scores:
        if not LIKERT_MIN <= s <= LIKERT_MAX:
            raise ValueError(f"score {s} outside [{LIKERT_MIN}, {LIKERT_MAX}]")
    if rule == "mean":
        return float(np.mean(scores))
    if rule == "max":
        return float(max(scores))
    if rule == "majority":
        values, counts = np.unique(np.asarray(scores), return_counts=True)
        if counts.max() >= 2:
            return float(values[np.argmax(counts)])
        return float(np.median(scores))
    raise ValueError(f"unknown aggregation rule {rule!r}; choose from {AGGREGATION_RULES}")


def binarize(aggregated_label: float, threshold: float = DEFAULT_BINARIZE_THRESHOLD) -> int:
    """1 (violent) iff the aggregated label reaches the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return int(aggregated_label >= threshold)


def binary_labels(manifest: Manifest, rule: str = "mean",
                  threshold: float = DEFAULT_BINARIZE_THRESHOLD) -> np.ndarray:
    return np.array([
        binarize(aggregate_scores(rec.reviewer_scores, rule), threshold)
        for rec in manifest
    ], dtype=np.int64)


def threshold_sweep(manifest: Manifest, rule: str = "mean",
                    thresholds=None) -> list:
    """Class counts per binarization threshold, for calibrating the split."""
    labels = np.array([aggregate_scores(r.reviewer_scores, rule) for r in manifest])
    if thresholds is None:
        thresholds = np.arange(0.0, LIKERT_MAX + 0.5, 0.5)
    return [
        {"threshold": float(t),
         "violent": int(np.sum(labels >= t)),
         "non_violent": int(np.sum(labels < t))}
        for t in thresholds
    ]


def anova_oneway(groups) -> dict:
    """One-way ANOVA F test across score groups.

    F is the between-group mean square over the within-group mean square;
    the p-value comes from the F distribution (regularized incomplete beta).
    """
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if any(g.size < 2 for g in groups):
        raise ValueError("every group needs at least 2 observations")
    k = len(groups)
    n_total = sum(g.size for g in groups)
    if n_total <= k:
        raise ValueError("need more observations than groups")
    grand_mean = np.concatenate(groups).mean()
    ss_between = sum(g.size * (g.mean() - grand_mean) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    df_between = k - 1
    df_within = n_total - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    means = [float(g.mean()) for g in groups]
    stds = [float(g.std()) for g in groups]
    if ms_within == 0.0:
        if ms_between == 0.0:
            return {"F": 0.0, "p_value": 1.0, "group_means": means, "group_stds": stds}
        return {"F": np.inf, "p_value": 0.0, "group_means": means, "group_stds": stds}
    f_stat = ms_between / ms_within
    p = float(f_dist.sf(f_stat, df_between, df_within))
    return {"F": float(f_stat), "p_value": p, "group_means": means, "group_stds": stds}


def reviewer_anova(manifest: Manifest) -> dict:
    """ANOVA over the three reviewer score columns of a manifest."""
    scores = np.array([rec.reviewer_scores for rec in manifest], dtype=np.float64)
    return anova_oneway([scores[:, 0], scores[:, 1], scores[:, 2]])


def class_balance(manifest: Manifest, rule: str = "mean",
                  threshold: float = DEFAULT_BINARIZE_THRESHOLD,
                  claimed_totals: dict | None = None) -> dict:
    """Class counts and proportions, per source collection and overall.

    claimed_totals, when given, maps source -> (violent, non_violent)
    external figures; any mismatch with the computed counts raises the
    inconsistency flag rather than an error.
    """
    labels = binary_labels(manifest, rule, threshold)
    total = len(manifest)
    violent = int(labels.sum())
    non_violent = total - violent
    per_source: dict = {}
    for rec, lab in zip(manifest, labels):
        entry = per_source.setdefault(rec.source or "unknown",
                                      {"violent": 0, "non_violent": 0})
        entry["violent" if lab else "non_violent"] += 1
    inconsistencies = []
    if claimed_totals:
        for source, (cv, cn) in claimed_totals.items():
            got = per_source.get(source, {"violent": 0, "non_violent": 0})
            if (got["violent"], got["non_violent"]) != (cv, cn):
                inconsistencies.append(
                    f"{source}: claimed {cv}/{cn}, computed "
                    f"{got['violent']}/{got['non_violent']}"
                )
        claimed_sum = sum(cv + cn for cv, cn in claimed_totals.values())
        if claimed_sum != total:
            inconsistencies.append(
                f"claimed per-source totals sum to {claimed_sum}, manifest has {total}"
            )
    warnings = []
    if violent == 0 or non_violent == 0:
        warnings.append("one class is empty")
    return {
        "total": total,
        "violent": violent,
        "non_violent": non_violent,
        "violent_proportion": violent / total if total else 0.0,
        "non_violent_proportion": non_violent / total if total else 0.0,
        "per_source": per_source,
        "inconsistencies": inconsistencies,
        "warnings": warnings,
    }
