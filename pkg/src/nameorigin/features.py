"""Character n-gram features.

Two featurisations share the same gram extraction: TF-IDF over an explicit
vocabulary (linear model) and hashed bucket indices (shallow model).  Grams
are contiguous substrings of the raw name, spaces included, no padding
sentinels.  Hashing uses FNV-1a 64 so bucket assignments are portable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, FormatError
from .prng import fnv1a64

VOCABULARY_VERSION = 1
DEFAULT_HASH_BUCKETS = 2_097_152


@dataclass(frozen=True)
class NgramConfig:
    n_min: int = 1
    n_max: int = 4
    max_features: int = 50_000
    lowercase: bool = True
    hashing_buckets: int | None = None

    def __post_init__(self):
        if not (1 <= self.n_min <= self.n_max <= 8):
            raise FormatError("require 1 <= n_min <= n_max <= 8")
        if self.hashing_buckets is None and self.max_features < 1:
            raise FormatError("max_features must be >= 1")
        if self.hashing_buckets is not None and self.hashing_buckets < 1:
            raise FormatError("hashing_buckets must be >= 1")


@dataclass(frozen=True)
class SparseVector:
    """Index-sorted sparse vector with unique indices."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass
class Vocabulary:
    config: NgramConfig
    gram_to_index: dict[str, int]
    idf: np.ndarray  # float64, one weight per index
    fitted_on: str  # corpus fingerprint

    @property
    def size(self) -> int:
        return len(self.gram_to_index)

    def to_json(self) -> str:
        grams = sorted(self.gram_to_index, key=self.gram_to_index.get)
        payload = {
            "version": VOCABULARY_VERSION,
            "config": {
                "n_min": self.config.n_min,
                "n_max": self.config.n_max,
                "max_features": self.config.max_features,
                "lowercase": self.config.lowercase,
            },
            "grams": grams,
            "idf": [float(x) for x in self.idf],
            "fitted_on": self.fitted_on,
        }
        return json.dumps(payload, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        payload = json.loads(text)
        if payload.get("version") != VOCABULARY_VERSION:
            raise FormatError(f"unsupported vocabulary version: {payload.get('version')}")
        config = NgramConfig(
            n_min=payload["config"]["n_min"],
            n_max=payload["config"]["n_max"],
            max_features=payload["config"]["max_features"],
            lowercase=payload["config"]["lowercase"],
        )
        gram_to_index = {g: i for i, g in enumerate(payload["grams"])}
        return cls(config, gram_to_index, np.asarray(payload["idf"], dtype=np.float64),
                   payload["fitted_on"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text("utf-8"))


def extract_ngrams(name: str, config: NgramConfig) -> list[str]:
    """All contiguous substrings of lengths n_min..n_max, duplicates kept."""
    text = name.lower() if config.lowercase else name
    grams: list[str] = []
    length = len(text)
    for n in range(config.n_min, config.n_max + 1):
        for start in range(length - n + 1):
            grams.append(text[start : start + n])
    return grams


def corpus_fingerprint(names: Sequence[str], config: NgramConfig) -> str:
    digest = hashlib.sha256()
    digest.update(
        f"{config.n_min}/{config.n_max}/{config.max_features}/{config.lowercase}".encode()
    )
    for name in names:
        digest.update(name.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def fit_vocabulary(names: Sequence[str], config: NgramConfig) -> Vocabulary:
    """Select the ``max_features`` grams with highest document frequency.

    Ties break lexicographically.  idf(g) = ln((1+N)/(1+df(g))) + 1 with N the
    number of training names.
    """
    if not names:
        raise FormatError("cannot fit a vocabulary on an empty corpus")
    df: dict[str, int] = {}
    for name in names:
        for gram in set(extract_ngrams(name, config)):
            df[gram] = df.get(gram, 0) + 1
    selected = sorted(df, key=lambda g: (-df[g], g))[: config.max_features]
    gram_to_index = {g: i for i, g in enumerate(sorted(selected))}
    n_docs = len(names)
    idf = np.empty(len(gram_to_index), dtype=np.float64)
    for gram, idx in gram_to_index.items():
        idf[idx] = math.log((1 + n_docs) / (1 + df[gram])) + 1.0
    return Vocabulary(config, gram_to_index, idf, corpus_fingerprint(names, config))


def transform(name: str, vocab: Vocabulary) -> SparseVector:
    """TF-IDF vector: raw term counts times idf, then L2-normalised.

    Out-of-vocabulary grams are dropped; a name with no known grams maps to
    the zero vector.
    """
    counts: dict[int, int] = {}
    for gram in extract_ngrams(name, vocab.config):
        idx = vocab.gram_to_index.get(gram)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
    values = np.array([counts[i] for i in indices], dtype=np.float64) * vocab.idf[indices]
    norm = np.sqrt(np.dot(values, values))
    return SparseVector(indices, values / norm)


def transform_all(names: Iterable[str], vocab: Vocabulary) -> list[SparseVector]:
    return [transform(name, vocab) for name in names]


def hash_ngrams(name: str, config: NgramConfig) -> list[int]:
    """Bucket indices (FNV-1a 64 mod buckets) for each gram; duplicates kept."""
    if config.hashing_buckets is None:
        raise DimensionMismatch("hashing_buckets is not set on this config")
    buckets = config.hashing_buckets
    return [fnv1a64(gram) % buckets for gram in extract_ngrams(name, config)]


def hashed_bag(name: str, config: NgramConfig) -> tuple[np.ndarray, np.ndarray]:
    """Unique bucket indices plus mean-pooling weights (counts / total grams).

    The weight vector sums to 1 for names with at least one gram, so the
    embedding lookup ``weights @ E[indices]`` equals the mean over grams.
    """
    idxs = hash_ngrams(name, config)
    if not idxs:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    counts: dict[int, int] = {}
    for idx in idxs:
        counts[idx] = counts.get(idx, 0) + 1
    unique = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
    weights = np.array([counts[i] for i in unique], dtype=np.float64) / len(idxs)
    return unique, weights
