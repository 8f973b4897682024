import math

import numpy as np
import pytest

from nameorigin.errors import DimensionMismatch, SingleClass
from nameorigin.features import NgramConfig, SparseVector, fit_vocabulary, transform_all
from nameorigin.linear_model import (
    LinearModel,
    TrainConfig,
    class_probabilities,
    ensure_compatible,
    fit_platt,
    hinge_objective,
    hinge_subgradient,
    predict_topk,
    train,
)
from nameorigin.prng import SplitMix64

from synth import make_corpus


def dense(vec: np.ndarray) -> SparseVector:
    idx = np.flatnonzero(vec)
    return SparseVector(idx.astype(np.int64), vec[idx].astype(np.float64))


class FakeVocab:
    """Minimal stand-in carrying just dimension and fingerprint."""

    def __init__(self, size, fingerprint="fake"):
        self.size = size
        self.fitted_on = fingerprint


def _separable_2d(n=40, seed=3):
    rng = SplitMix64(seed)
    vectors, labels = [], []
    for _ in range(n):
        x = rng.uniform(0.2, 1.0)
        y = rng.uniform(0.2, 1.0)
        if rng.next_float() < 0.5:
            vectors.append(dense(np.array([x, 0.0])))
            labels.append("A")
        else:
            vectors.append(dense(np.array([0.0, y])))
            labels.append("B")
    return vectors, labels


def test_separable_training_accuracy_one():
    vectors, labels = _separable_2d()
    model = train(FakeVocab(2), vectors, labels, vectors, labels, TrainConfig(seed=5))
    correct = sum(predict_topk(model, v, 1)[0][0] == lab for v, lab in zip(vectors, labels))
    assert correct == len(labels)


def test_single_class_rejected():
    vectors, _ = _separable_2d()
    with pytest.raises(SingleClass):
        train(FakeVocab(2), vectors, ["A"] * len(vectors), vectors, ["A"] * len(vectors),
              TrainConfig())


def test_dimension_mismatch_rejected():
    vectors, labels = _separable_2d()
    with pytest.raises(DimensionMismatch):
        train(FakeVocab(1), vectors, labels, vectors, labels, TrainConfig())


def test_topk_full_coverage_and_normalisation():
    vectors, labels = _separable_2d()
    model = train(FakeVocab(2), vectors, labels, vectors, labels, TrainConfig(seed=5))
    probs = class_probabilities(model, vectors[0])
    assert math.isclose(probs.sum(), 1.0, abs_tol=1e-6)
    full = predict_topk(model, vectors[0], k=len(model.classes))
    assert [lab for lab, _ in full] in (["A", "B"], ["B", "A"])
    scores = [s for _, s in full]
    assert scores == sorted(scores, reverse=True)


def test_topk_ties_break_label_ascending():
    model = LinearModel(
        classes=("A", "B", "C"),
        weights=np.zeros((3, 2)),
        bias=np.zeros(3),
        platt_a=np.ones(3),
        platt_b=np.zeros(3),
        vocab_fingerprint="fake",
        config=TrainConfig(),
    )
    zero = SparseVector(np.empty(0, dtype=np.int64), np.empty(0))
    top = predict_topk(model, zero, 3)
    assert [lab for lab, _ in top] == ["A", "B", "C"]
    assert all(math.isclose(s, 1 / 3, abs_tol=1e-9) for _, s in top)


def test_deterministic_given_seed():
    vectors, labels = _separable_2d()
    a = train(FakeVocab(2), vectors, labels, vectors, labels, TrainConfig(seed=9))
    b = train(FakeVocab(2), vectors, labels, vectors, labels, TrainConfig(seed=9))
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.bias, b.bias)
    c = train(FakeVocab(2), vectors, labels, vectors, labels, TrainConfig(seed=10))
    assert not np.array_equal(a.weights, c.weights)


def _reference_subgradient_descent(vectors, labels, classes, dim, c_reg, iters=4000):
    """Full-batch subgradient descent run to near-convergence (test oracle)."""
    class_ids = np.array([classes.index(lab) for lab in labels])
    w = np.zeros((len(classes), dim))
    b = np.zeros(len(classes))
    best = (np.inf, w, b)
    for t in range(1, iters + 1):
        g_w, g_b = hinge_subgradient(w, b, vectors, class_ids, c_reg)
        step = 1.0 / (t + 10.0)
        w = w - step * g_w / max(1.0, np.linalg.norm(g_w))
        b = b - step * g_b / max(1.0, np.linalg.norm(g_b) or 1.0)
        obj = hinge_objective(w, b, vectors, class_ids, c_reg)
        if obj < best[0]:
            best = (obj, w.copy(), b.copy())
    return best[1], best[2]


def test_sgd_agrees_with_reference_optimizer():
    records = make_corpus(["Japanese", "Russian", "Brazilian"], 10, seed=4)
    names = [r.name for r in records]
    labels = [r.nationality for r in records]
    vocab = fit_vocabulary(names, NgramConfig(1, 2, 60))
    vectors = transform_all(names, vocab)
    config = TrainConfig(C=1.0, epochs=60, seed=2)
    model = train(vocab, vectors, labels, vectors, labels, config)

    classes = sorted(set(labels))
    ref_w, ref_b = _reference_subgradient_descent(vectors, labels, classes, vocab.size, 1.0)
    agree = 0
    for vec in vectors:
        margins_ref = ref_b.copy()
        margins_model = model.bias.copy()
        if vec.nnz:
            margins_ref += ref_w[:, vec.indices] @ vec.values
            margins_model += model.weights[:, vec.indices] @ vec.values
        agree += classes[int(np.argmax(margins_ref))] == model.classes[int(np.argmax(margins_model))]
    assert agree / len(vectors) >= 0.95


def test_hinge_subgradient_matches_finite_differences_off_kink():
    rng = SplitMix64(21)
    dim, n_classes, n = 6, 3, 12
    vectors = [dense(np.array([rng.uniform(-1, 1) for _ in range(dim)])) for _ in range(n)]
    class_ids = np.array([rng.next_below(n_classes) for _ in range(n)])
    w = np.array([[rng.uniform(-0.5, 0.5) for _ in range(dim)] for _ in range(n_classes)])
    b = np.array([rng.uniform(-0.2, 0.2) for _ in range(n_classes)])

    margins = np.array([
        [float(w[c] @ _to_dense(v, dim)) + b[c] for c in range(n_classes)] for v in vectors
    ])
    assert np.abs(np.abs(margins) - 1.0).min() > 1e-3  # stay off the hinge kink

    g_w, g_b = hinge_subgradient(w, b, vectors, class_ids, 1.0)
    eps = 1e-6
    checked = 0
    for c in range(n_classes):
        for d in range(dim):
            w_plus, w_minus = w.copy(), w.copy()
            w_plus[c, d] += eps
            w_minus[c, d] -= eps
            fd = (
                hinge_objective(w_plus, b, vectors, class_ids, 1.0)
                - hinge_objective(w_minus, b, vectors, class_ids, 1.0)
            ) / (2 * eps)
            denom = max(abs(fd), abs(g_w[c, d]), 1e-3)
            assert abs(fd - g_w[c, d]) / denom < 1e-4
            checked += 1
        b_plus, b_minus = b.copy(), b.copy()
        b_plus[c] += eps
        b_minus[c] -= eps
        fd = (
            hinge_objective(w, b_plus, vectors, class_ids, 1.0)
            - hinge_objective(w, b_minus, vectors, class_ids, 1.0)
        ) / (2 * eps)
        denom = max(abs(fd), abs(g_b[c]), 1e-3)
        assert abs(fd - g_b[c]) / denom < 1e-4
    assert checked == n_classes * dim


def _to_dense(vec: SparseVector, dim: int) -> np.ndarray:
    out = np.zeros(dim)
    if vec.nnz:
        out[vec.indices] = vec.values
    return out


def test_platt_matches_scipy_mle():
    scipy_optimize = pytest.importorskip("scipy.optimize")
    rng = SplitMix64(33)
    margins = np.array([rng.uniform(-3, 3) for _ in range(400)])
    labels = np.where(margins + np.array([rng.uniform(-1, 1) for _ in range(400)]) > 0, 1.0, -1.0)
    a, b = fit_platt(margins, labels)

    prior1 = float((labels > 0).sum())
    prior0 = len(labels) - prior1
    t = np.where(labels > 0, (prior1 + 1) / (prior1 + 2), 1 / (prior0 + 2))

    def nll(params):
        z = params[0] * margins + params[1]
        return float(np.sum(t * np.logaddexp(0, -z) + (1 - t) * np.logaddexp(0, z)))

    res = scipy_optimize.minimize(nll, x0=np.array([0.0, 0.0]), method="Nelder-Mead",
                                  options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
    assert nll((a, b)) <= res.fun + 1e-6
    assert math.isclose(a, res.x[0], rel_tol=1e-2, abs_tol=1e-3)
    assert math.isclose(b, res.x[1], rel_tol=1e-2, abs_tol=1e-3)
    assert a > 0  # margins positively predict the positive class here


def test_platt_monotone_rank_stability():
    rng = SplitMix64(8)
    margins = np.array([rng.uniform(-2, 2) for _ in range(100)])
    labels = np.where(margins > 0, 1.0, -1.0)
    a, b = fit_platt(margins, labels)
    assert a > 0
    z = a * margins + b
    order_margin = np.argsort(-margins)
    order_prob = np.argsort(-z)
    assert np.array_equal(order_margin, order_prob)


def test_model_save_load_round_trip(tmp_path):
    vectors, labels = _separable_2d()
    model = train(FakeVocab(2, "fp-x"), vectors, labels, vectors, labels, TrainConfig(seed=5))
    path = tmp_path / "model.npz"
    model.save(path)
    loaded = LinearModel.load(path)
    assert loaded.classes == model.classes
    assert np.array_equal(loaded.weights, model.weights)
    assert loaded.vocab_fingerprint == "fp-x"
    with pytest.raises(DimensionMismatch):
        ensure_compatible(loaded, FakeVocab(2, "other-fp"))
