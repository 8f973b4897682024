"""One-vs-rest linear classifier with hinge loss and Platt-calibrated top-k.

Per class c the objective is

    F(w, b) = 0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i * (<w, x_i> + b))

minimised by seeded stochastic subgradient descent with step size
eta_t = 1 / (lambda * (t + t0)), lambda = 1 / (C * N), t0 = N.  All classes
share the sample stream, so the whole weight matrix trains in one pass using
the usual scale-factor trick for the multiplicative decay.  Probabilities
come from per-class Platt sigmoids sigma(A_c * margin + B_c) fitted on dev
margins by regularised maximum likelihood (Newton with backtracking line
search), then normalised across classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, FormatError, SingleClass
from .features import SparseVector, Vocabulary
from .prng import SplitMix64, derive

MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    epochs: int = 10
    seed: int = 0
    tolerance: float = 0.0

    def __post_init__(self):
        if self.C <= 0:
            raise FormatError("C must be positive")
        if self.epochs < 1:
            raise FormatError("epochs must be >= 1")


@dataclass
class LinearModel:
    classes: tuple[str, ...]
    weights: np.ndarray  # (C, D) float64
    bias: np.ndarray  # (C,) float64
    platt_a: np.ndarray  # (C,) float64
    platt_b: np.ndarray  # (C,) float64
    vocab_fingerprint: str
    config: TrainConfig

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def save(self, path: str | Path) -> None:
        meta = {
            "version": MODEL_VERSION,
            "classes": list(self.classes),
            "vocab_fingerprint": self.vocab_fingerprint,
            "config": {
                "C": self.config.C,
                "epochs": self.config.epochs,
                "seed": self.config.seed,
                "tolerance": self.config.tolerance,
            },
        }
        np.savez_compressed(
            path,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
            weights=self.weights,
            bias=self.bias,
            platt_a=self.platt_a,
            platt_b=self.platt_b,
        )

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        with np.load(path) as blob:
            meta = json.loads(bytes(blob["meta"]).decode("utf-8"))
            if meta.get("version") != MODEL_VERSION:
                raise FormatError(f"unsupported model version: {meta.get('version')}")
            cfg = meta["config"]
            return cls(
                classes=tuple(meta["classes"]),
                weights=blob["weights"],
                bias=blob["bias"],
                platt_a=blob["platt_a"],
                platt_b=blob["platt_b"],
                vocab_fingerprint=meta["vocab_fingerprint"],
                config=TrainConfig(cfg["C"], cfg["epochs"], cfg["seed"], cfg["tolerance"]),
            )


def ensure_compatible(model: LinearModel, vocab: Vocabulary) -> None:
    """Refuse to predict against a vocabulary the model was not fitted on."""
    if model.vocab_fingerprint != vocab.fitted_on:
        raise DimensionMismatch(
            "vocabulary fingerprint mismatch: model was trained on a different corpus"
        )


def _to_csr(vectors: Sequence[SparseVector], dim: int):
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, vec in enumerate(vectors):
        if vec.nnz and int(vec.indices[-1]) >= dim:
            raise DimensionMismatch(
                f"vector index {int(vec.indices[-1])} out of range for dimension {dim}"
            )
        indptr[i + 1] = indptr[i] + vec.nnz
    indices = np.empty(indptr[-1], dtype=np.int64)
    values = np.empty(indptr[-1], dtype=np.float64)
    for i, vec in enumerate(vectors):
        indices[indptr[i] : indptr[i + 1]] = vec.indices
        values[indptr[i] : indptr[i + 1]] = vec.values
    return indptr, indices, values


def train(
    vocab: Vocabulary,
    train_vectors: Sequence[SparseVector],
    train_labels: Sequence[str],
    dev_vectors: Sequence[SparseVector],
    dev_labels: Sequence[str],
    config: TrainConfig = TrainConfig(),
) -> LinearModel:
    if len(train_vectors) != len(train_labels):
        raise DimensionMismatch("train vectors and labels differ in length")
    classes = tuple(sorted(set(train_labels)))
    if len(classes) < 2:
        raise SingleClass("need at least two classes to train")
    class_index = {c: i for i, c in enumerate(classes)}
    y_class = np.array([class_index[lab] for lab in train_labels], dtype=np.int64)

    dim = vocab.size
    n = len(train_vectors)
    n_classes = len(classes)
    indptr, indices, values = _to_csr(train_vectors, dim)

    lam = 1.0 / (config.C * n)
    t0 = n
    v = np.zeros((n_classes, dim), dtype=np.float64)
    bias = np.zeros(n_classes, dtype=np.float64)
    scale = 1.0
    y_signs = np.full(n_classes, -1.0)

    rng = SplitMix64(derive(config.seed, "svm/shuffle"))
    t = 0
    prev_epoch_loss = np.inf
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_hinge = 0.0
        for i in order:
            t += 1
            eta = 1.0 / (lam * (t + t0))
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            vals = values[lo:hi]
            margins = bias.copy()
            if idx.size:
                margins += scale * (v[:, idx] @ vals)
            y = y_signs.copy()
            y[y_class[i]] = 1.0
            ym = y * margins
            epoch_hinge += float(np.maximum(0.0, 1.0 - ym).sum())
            scale *= 1.0 - 1.0 / (t + t0)
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            violated = np.flatnonzero(ym < 1.0)
            if violated.size:
                if idx.size:
                    v[np.ix_(violated, idx)] += (eta / scale) * y[violated, None] * vals[None, :]
                bias[violated] += eta * y[violated]
        epoch_loss = epoch_hinge / n
        if config.tolerance > 0 and prev_epoch_loss - epoch_loss < config.tolerance:
            break
        prev_epoch_loss = epoch_loss

    weights = scale * v
    platt_a = np.zeros(n_classes)
    platt_b = np.zeros(n_classes)
    dev_margins = _margins(weights, bias, dev_vectors, dim)
    dev_y = np.array([class_index.get(lab, -1) for lab in dev_labels], dtype=np.int64)
    for c in range(n_classes):
        targets = (dev_y == c).astype(np.float64) * 2.0 - 1.0
        platt_a[c], platt_b[c] = fit_platt(dev_margins[:, c], targets)

    return LinearModel(
        classes=classes,
        weights=weights,
        bias=bias,
        platt_a=platt_a,
        platt_b=platt_b,
        vocab_fingerprint=vocab.fitted_on,
        config=config,
    )


def _margins(
    weights: np.ndarray, bias: np.ndarray, vectors: Sequence[SparseVector], dim: int
) -> np.ndarray:
    indptr, indices, values = _to_csr(vectors, dim)
    out = np.tile(bias, (len(vectors), 1))
    for i in range(len(vectors)):
        lo, hi = indptr[i], indptr[i + 1]
        if hi > lo:
            out[i] += weights[:, indices[lo:hi]] @ values[lo:hi]
    return out


def fit_platt(margins: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Fit sigma(A*m + B) to +-1 labels by regularised maximum likelihood.

    Newton iterations with backtracking line search on the cross-entropy
    against the usual smoothed targets (n+ + 1)/(n+ + 2) and 1/(n- + 2).
    """
    margins = np.asarray(margins, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    prior1 = float(np.sum(labels > 0))
    prior0 = float(len(labels) - prior1)
    hi_t = (prior1 + 1.0) / (prior1 + 2.0)
    lo_t = 1.0 / (prior0 + 2.0)
    t = np.where(labels > 0, hi_t, lo_t)

    a, b = 0.0, np.log((prior1 + 1.0) / (prior0 + 1.0))
    sigma = 1e-12
    eps = 1e-5
    min_step = 1e-10

    def nll(a_: float, b_: float) -> float:
        z = a_ * margins + b_
        # t*log(1+e^-z) + (1-t)*log(1+e^z), stable both directions
        return float(np.sum(t * np.logaddexp(0.0, -z) + (1.0 - t) * np.logaddexp(0.0, z)))

    fval = nll(a, b)
    for _ in range(100):
        z = a * margins + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        d1 = p - t
        d2 = p * (1.0 - p)
        g1 = float(np.dot(d1, margins))
        g2 = float(np.sum(d1))
        if abs(g1) < eps and abs(g2) < eps:
            break
        h11 = float(np.dot(d2, margins * margins)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.dot(d2, margins))
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            new_a, new_b = a + step * da, b + step * db
            new_f = nll(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            break
    return a, b


def class_probabilities(model: LinearModel, vector: SparseVector) -> np.ndarray:
    """Calibrated probabilities over classes, normalised to sum to 1."""
    if vector.nnz and int(vector.indices[-1]) >= model.dim:
        raise DimensionMismatch("vector dimensionality exceeds model dimension")
    margins = model.bias.copy()
    if vector.nnz:
        margins += model.weights[:, vector.indices] @ vector.values
    z = model.platt_a * margins + model.platt_b
    probs = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    total = probs.sum()
    if total <= 0:
        return np.full(len(model.classes), 1.0 / len(model.classes))
    return probs / total


def predict_topk(model: LinearModel, vector: SparseVector, k: int) -> list[tuple[str, float]]:
    """Top-k (label, probability) pairs, ties broken by label ascending."""
    if not (1 <= k <= len(model.classes)):
        raise FormatError(f"k must be in 1..{len(model.classes)}")
    probs = class_probabilities(model, vector)
    ranked = sorted(zip(model.classes, probs), key=lambda pair: (-pair[1], pair[0]))
    return [(lab, float(p)) for lab, p in ranked[:k]]


def hinge_objective(
    weights: np.ndarray,
    bias: np.ndarray,
    vectors: Sequence[SparseVector],
    class_ids: np.ndarray,
    c_reg: float,
) -> float:
    """Full-batch value of the one-vs-rest objective (sum over classes)."""
    n_classes = weights.shape[0]
    total = 0.5 * float(np.sum(weights * weights))
    margins = _margins(weights, bias, vectors, weights.shape[1])
    y = np.full((len(vectors), n_classes), -1.0)
    y[np.arange(len(vectors)), class_ids] = 1.0
    total += c_reg * float(np.maximum(0.0, 1.0 - y * margins).sum())
    return total


def hinge_subgradient(
    weights: np.ndarray,
    bias: np.ndarray,
    vectors: Sequence[SparseVector],
    class_ids: np.ndarray,
    c_reg: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic subgradient of :func:`hinge_objective` (zero exactly at kinks)."""
    n_classes, dim = weights.shape
    g_w = weights.copy()
    g_b = np.zeros(n_classes)
    margins = _margins(weights, bias, vectors, dim)
    for i, vec in enumerate(vectors):
        y = np.full(n_classes, -1.0)
        y[class_ids[i]] = 1.0
        violated = np.flatnonzero(y * margins[i] < 1.0)
        if violated.size and vec.nnz:
            g_w[np.ix_(violated, vec.indices)] -= c_reg * y[violated, None] * vec.values[None, :]
        g_b[violated] -= c_reg * y[violated]
    return g_w, g_b
