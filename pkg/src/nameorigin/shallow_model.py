"""Shallow classifier over hashed character n-gram embeddings.

Forward pass: mean of the gram embeddings -> linear layer -> softmax.
Training is plain per-sample SGD on cross-entropy with a linearly decaying
learning rate, embeddings initialised uniform(-1/dim, 1/dim) from the seeded
portable PRNG.  The output layer starts at zero.  Names too short to yield
any gram are skipped during training and predicted as the uniform
distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, SingleClass
from .features import DEFAULT_HASH_BUCKETS, NgramConfig, hashed_bag
from .prng import SplitMix64, derive

MODEL_VERSION = 1
HASH_FUNCTION_ID = "fnv1a64"


@dataclass(frozen=True)
class ShallowConfig:
    buckets: int = DEFAULT_HASH_BUCKETS
    dim: int = 100
    lr: float = 0.5
    epochs: int = 25
    n_min: int = 2
    n_max: int = 5
    seed: int = 0
    dtype: str = "float32"  # float64 only needed for gradient-check precision

    def __post_init__(self):
        if self.buckets < 1 or self.dim < 1 or self.epochs < 1:
            raise FormatError("buckets, dim, and epochs must be positive")
        if self.lr <= 0:
            raise FormatError("lr must be positive")

    @property
    def ngrams(self) -> NgramConfig:
        return NgramConfig(
            n_min=self.n_min,
            n_max=self.n_max,
            max_features=1,
            lowercase=True,
            hashing_buckets=self.buckets,
        )


@dataclass
class ShallowModel:
    classes: tuple[str, ...]
    embeddings: np.ndarray  # (buckets, dim)
    output: np.ndarray  # (dim, C)
    bias: np.ndarray  # (C,)
    config: ShallowConfig

    def save(self, path: str | Path) -> None:
        meta = {
            "version": MODEL_VERSION,
            "hash_function": HASH_FUNCTION_ID,
            "classes": list(self.classes),
            "config": {
                "buckets": self.config.buckets,
                "dim": self.config.dim,
                "lr": self.config.lr,
                "epochs": self.config.epochs,
                "n_min": self.config.n_min,
                "n_max": self.config.n_max,
                "seed": self.config.seed,
                "dtype": self.config.dtype,
            },
        }
        np.savez_compressed(
            path,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
            embeddings=self.embeddings,
            output=self.output,
            bias=self.bias,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ShallowModel":
        with np.load(path) as blob:
            meta = json.loads(bytes(blob["meta"]).decode("utf-8"))
            if meta.get("version") != MODEL_VERSION:
                raise FormatError(f"unsupported model version: {meta.get('version')}")
            if meta.get("hash_function") != HASH_FUNCTION_ID:
                raise FormatError(f"model hashed with {meta.get('hash_function')!r}, "
                                  f"expected {HASH_FUNCTION_ID!r}")
            cfg = ShallowConfig(**meta["config"])
            emb = blob["embeddings"]
            if emb.shape[0] != cfg.buckets:
                raise FormatError("bucket count in arrays disagrees with config")
            return cls(tuple(meta["classes"]), emb, blob["output"], blob["bias"], cfg)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def train(
    train_names: Sequence[str],
    train_labels: Sequence[str],
    config: ShallowConfig = ShallowConfig(),
) -> ShallowModel:
    if len(train_names) != len(train_labels):
        raise FormatError("names and labels differ in length")
    classes = tuple(sorted(set(train_labels)))
    if len(classes) < 2:
        raise SingleClass("need at least two classes to train")
    class_index = {c: i for i, c in enumerate(classes)}
    dtype = np.dtype(config.dtype)

    bags = [hashed_bag(name, config.ngrams) for name in train_names]
    usable = [i for i, (idx, _) in enumerate(bags) if idx.size]
    targets = np.array([class_index[lab] for lab in train_labels], dtype=np.int64)

    init_rng = SplitMix64(derive(config.seed, "fasttext/init"))
    bound = 1.0 / config.dim
    embeddings = init_rng.fill_uniform((config.buckets, config.dim), -bound, bound).astype(dtype)
    output = np.zeros((config.dim, len(classes)), dtype=dtype)
    bias = np.zeros(len(classes), dtype=dtype)

    shuffle_rng = SplitMix64(derive(config.seed, "fasttext/shuffle"))
    total_steps = config.epochs * len(usable)
    step = 0
    for _ in range(config.epochs):
        order = list(usable)
        shuffle_rng.shuffle(order)
        for i in order:
            lr = config.lr * (1.0 - step / total_steps)
            step += 1
            idx, w = bags[i]
            weights = w.astype(dtype)
            h = weights @ embeddings[idx]
            probs = softmax((h @ output + bias).astype(np.float64))
            dlogits = probs.astype(dtype)
            dlogits[targets[i]] -= 1.0
            dh = output @ dlogits
            output -= lr * np.outer(h, dlogits)
            bias -= lr * dlogits
            embeddings[idx] -= lr * np.outer(weights, dh)
    return ShallowModel(classes, embeddings, output, bias, config)


def class_probabilities(model: ShallowModel, name: str) -> np.ndarray:
    """Softmax distribution over classes; uniform when no gram is extractable."""
    idx, w = hashed_bag(name, model.config.ngrams)
    n_classes = len(model.classes)
    if idx.size == 0:
        return np.full(n_classes, 1.0 / n_classes)
    h = w.astype(model.embeddings.dtype) @ model.embeddings[idx]
    logits = (h @ model.output + model.bias).astype(np.float64)
    return softmax(logits)


def predict_topk(model: ShallowModel, name: str, k: int) -> list[tuple[str, float]]:
    """Top-k (label, probability) pairs, ties broken by label ascending."""
    if not (1 <= k <= len(model.classes)):
        raise FormatError(f"k must be in 1..{len(model.classes)}")
    probs = class_probabilities(model, name)
    ranked = sorted(zip(model.classes, probs), key=lambda pair: (-pair[1], pair[0]))
    return [(lab, float(p)) for lab, p in ranked[:k]]


def loss_and_grads(
    embeddings: np.ndarray,
    output: np.ndarray,
    bias: np.ndarray,
    samples: Sequence[tuple[np.ndarray, np.ndarray, int]],
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Batch cross-entropy and analytic gradients, for verification.

    ``samples`` holds (bucket indices, mean weights, target class) triples.
    Gradients are dense arrays of the same shapes as the parameters.
    """
    g_emb = np.zeros_like(embeddings)
    g_out = np.zeros_like(output)
    g_bias = np.zeros_like(bias)
    loss = 0.0
    for idx, w, target in samples:
        h = w @ embeddings[idx]
        probs = softmax(h @ output + bias)
        loss -= float(np.log(probs[target]))
        dlogits = probs.copy()
        dlogits[target] -= 1.0
        g_out += np.outer(h, dlogits)
        g_bias += dlogits
        dh = output @ dlogits
        g_emb[idx] += np.outer(w, dh)
    return loss, g_emb, g_out, g_bias
