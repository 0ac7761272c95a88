"""Lexicon category proportions, PCA reduction and embedding ingestion.

Category vectors count the fraction of tokens matching each lexicon
category (wildcard `*` suffixes are prefix matches).  PCA is validated by
Bartlett's sphericity test before reduction.  Transformer embeddings are
consumed as precomputed 768-dim vectors from a JSONL file; a deterministic
hash embedding stands in when no exported file exists.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

EMBEDDING_DIM = 768
DEFAULT_VARIANCE_TARGET = 0.95

_TOKEN_CLEAN = re.compile(r"[^a-z0-9]+")

# Small documented stand-in lexicon: function words, common verbs and
# anger/negative-emotion lists.  The proprietary LIWC dictionary is not
# redistributable; supply a real one via a lexicon file.
DEFAULT_LEXICON_SPEC = {
    "function": ["i", "you", "he", "she", "it", "we", "they", "the", "a", "an",
                 "to", "of", "in", "on", "at", "and", "or", "but", "very",
                 "my", "your", "his", "her", "our", "their", "this", "that"],
    "common_verbs": ["go", "going", "come", "take", "carry", "think", "know",
                     "want", "need", "make", "do", "say", "get", "see", "feel"],
    "anger": ["hate*", "kill*", "fight*", "hit*", "hurt*", "angry", "rage",
              "furious", "attack*", "threat*", "shout*", "scream*", "slap*"],
    "negative_emotion": ["bad", "awful", "terrible", "sad", "cry*", "afraid",
                         "scared", "fear*", "worr*", "upset", "miserable",
                         "horrible", "pain*"],
    "swear": ["damn*", "hell", "bloody", "stupid", "idiot*", "shut"],
}


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace.

    Stopwords are retained: lexicon counting needs function words.
    """
    tokens = []
    for raw in text.lower().split():
        cleaned = _TOKEN_CLEAN.sub("", raw)
        if cleaned:
            tokens.append(cleaned)
    return tokens


@dataclass(frozen=True)
class Lexicon:
    """Category name -> word patterns; a trailing `*` is a prefix match."""

    categories: dict

    def __post_init__(self):
        if not self.categories:
            raise ValueError("lexicon has no categories")
        for name, patterns in self.categories.items():
            if not patterns:
                raise ValueError(f"category {name!r} has no patterns")
            for p in patterns:
                if not p or p != p.lower():
                    raise ValueError(f"category {name!r}: invalid pattern {p!r}")

    @property
    def category_names(self) -> list[str]:
        return list(self.categories)

    def matcher(self, category: str):
        """Compile a category's patterns into a single predicate."""
        exact = set()
        prefixes = []
        for p in self.categories[category]:
            if p.endswith("*"):
                prefixes.append(p[:-1])
            else:
                exact.add(p)
        prefixes = tuple(prefixes)

        def match(token: str) -> bool:
            if token in exact:
                return True
            return bool(prefixes) and token.startswith(prefixes)

        return match


def default_lexicon() -> Lexicon:
    return Lexicon(categories=dict(DEFAULT_LEXICON_SPEC))


def load_lexicon(path) -> Lexicon:
    """Parse a `category: word1 word2 kill*` per-line lexicon file."""
    categories: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'category: words...'")
            name, words = line.split(":", 1)
            name = name.strip()
            if name in categories:
                raise ValueError(f"{path}:{lineno}: duplicate category {name!r}")
            categories[name] = words.lower().split()
    return Lexicon(categories=categories)


@dataclass(frozen=True)
class CategoryVector:
    """Per-category proportion of matched tokens, plus the token count."""

    proportions: np.ndarray
    token_count: int
    category_names: tuple


def category_counts(tokens: list[str], lexicon: Lexicon) -> CategoryVector:
    """Fraction of tokens matching each category (0 for empty input)."""
    names = tuple(lexicon.category_names)
    if not tokens:
        return CategoryVector(np.zeros(len(names)), 0, names)
    props = np.empty(len(names))
    for i, name in enumerate(names):
        match = lexicon.matcher(name)
        props[i] = sum(1 for t in tokens if match(t)) / len(tokens)
    return CategoryVector(props, len(tokens), names)


@dataclass(frozen=True)
class PcaModel:
    """Orthonormal components [n_components, n_features] of centered data."""

    components: np.ndarray
    mean: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(data: np.ndarray, variance_target: float = DEFAULT_VARIANCE_TARGET) -> PcaModel:
    """Fit PCA via SVD of the centered data matrix.

    Keeps the smallest component count whose cumulative explained variance
    reaches variance_target.  Component signs are normalized so the
    largest-magnitude loading is positive.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] < 1:
        raise ValueError(f"need an [n >= 2, p >= 1] matrix, got shape {data.shape}")
    if not 0 < variance_target <= 1:
        raise ValueError("variance_target must be in (0, 1]")
    mean = data.mean(axis=0)
    centered = data - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = s ** 2 / data.shape[0]
    total = variances.sum()
    if total <= 0.0:
        # zero-variance data: a single degenerate component
        comp = np.zeros((1, data.shape[1]))
        comp[0, 0] = 1.0
        return PcaModel(comp, mean, np.zeros(1))
    ratios = variances / total
    cumulative = np.cumsum(ratios)
    n_keep = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    n_keep = min(n_keep, vt.shape[0])
    components = vt[:n_keep].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(components, mean, ratios[:n_keep])


def pca_transform(model: PcaModel, vectors: np.ndarray) -> np.ndarray:
    """Project vectors (1-D or [n, p]) onto the retained components."""
    vectors = np.asarray(vectors, dtype=np.float64)
    return (vectors - model.mean) @ model.components.T


def bartlett_sphericity(data: np.ndarray) -> dict:
    """Bartlett's test that the correlation matrix is the identity.

    statistic = -(n - 1 - (2p + 5)/6) * ln det(R); p-value from chi-square
    with p(p-1)/2 degrees of freedom.
    """
    data = np.asarray(data, dtype=np.float64)
    n, p = data.shape
    if n <= p:
        raise ValueError(f"need more rows than columns, got {n} x {p}")
    stds = data.std(axis=0)
    if np.any(stds == 0.0):
        raise ValueError("zero-variance column: correlation matrix undefined")
    corr = np.corrcoef(data, rowvar=False)
    sign, logdet = np.linalg.slogdet(corr)
    dof = p * (p - 1) // 2
    if sign <= 0 or not np.isfinite(logdet):
        return {"statistic": np.inf, "p_value": 0.0, "dof": dof, "singular": True}
    statistic = -(n - 1 - (2 * p + 5) / 6.0) * logdet
    return {
        "statistic": statistic,
        "p_value": float(chi2.sf(statistic, dof)),
        "dof": dof,
        "singular": False,
    }


@dataclass(frozen=True)
class EmbeddingRecord:
    segment_id: str
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.shape != (EMBEDDING_DIM,):
            raise ValueError(
                f"segment {self.segment_id!r}: expected {EMBEDDING_DIM}-dim vector, "
                f"got shape {vec.shape}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"segment {self.segment_id!r}: non-finite embedding")
        object.__setattr__(self, "vector", vec)


def load_embeddings(path) -> dict:
    """Load a JSONL embedding file of {id, vec} rows into an id-keyed map."""
    records = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            seg_id = str(row["id"])
            vec = np.asarray(row["vec"], dtype=np.float64)
            if vec.shape != (EMBEDDING_DIM,):
                raise ValueError(
                    f"{path}:{lineno}: segment {seg_id!r} has dimension "
                    f"{vec.shape[0] if vec.ndim == 1 else vec.shape}, expected {EMBEDDING_DIM}"
                )
            records[seg_id] = EmbeddingRecord(seg_id, vec)
    return records


def hash_embedding(text: str, dim: int = EMBEDDING_DIM) -> np.ndarray:
    """Deterministic unit-norm pseudo-embedding derived from the text hash."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return vec / norm
