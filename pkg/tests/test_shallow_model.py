import math

import numpy as np
import pytest

from nameorigin.errors import FormatError, SingleClass
from nameorigin.features import hashed_bag
from nameorigin.prng import SplitMix64
from nameorigin.shallow_model import (
    ShallowConfig,
    ShallowModel,
    class_probabilities,
    loss_and_grads,
    predict_topk,
    softmax,
    train,
)

SMALL = ShallowConfig(buckets=256, dim=16, lr=0.5, epochs=30, n_min=2, n_max=3,
                      seed=1, dtype="float64")


def test_disjoint_gram_sets_reach_training_accuracy_one():
    names_a = [f"aaaa bb{suffix}" for suffix in ("a", "b", "c", "d", "e", "f", "g", "h")]
    names_b = [f"zzzz yy{suffix}" for suffix in ("z", "y", "x", "w", "v", "u", "t", "s")]
    names = names_a + names_b
    labels = ["A"] * len(names_a) + ["B"] * len(names_b)
    model = train(names, labels, SMALL)
    correct = sum(predict_topk(model, n, 1)[0][0] == lab for n, lab in zip(names, labels))
    assert correct == len(names)


def test_single_class_rejected():
    with pytest.raises(SingleClass):
        train(["ab cd", "ef gh"], ["A", "A"], SMALL)


def test_probabilities_sum_to_one():
    model = train(["aaaa", "bbbb", "cccc", "dddd"], ["A", "B", "A", "B"], SMALL)
    probs = class_probabilities(model, "abcd")
    assert math.isclose(probs.sum(), 1.0, abs_tol=1e-6)


def test_empty_gram_name_predicts_uniform_alphabetical():
    model = train(["aaaa", "bbbb", "cccc", "dddd"],
                  ["B", "A", "C", "A"], SMALL)
    # n_min=2: a single character yields no grams
    probs = class_probabilities(model, "q")
    assert np.allclose(probs, 1.0 / 3)
    top2 = predict_topk(model, "q", 2)
    assert [lab for lab, _ in top2] == ["A", "B"]


def test_topk_k1_is_argmax():
    model = train(["aaaa", "bbbb", "cccc", "dddd"], ["A", "B", "A", "B"], SMALL)
    probs = class_probabilities(model, "aaaa")
    top1 = predict_topk(model, "aaaa", 1)[0][0]
    assert top1 == model.classes[int(np.argmax(probs))]


def test_k_out_of_range():
    model = train(["aaaa", "bbbb"], ["A", "B"], SMALL)
    with pytest.raises(FormatError):
        predict_topk(model, "aaaa", 3)


def test_softmax_shift_invariance():
    logits = np.array([0.3, -1.2, 2.0, 0.0])
    assert np.allclose(softmax(logits), softmax(logits + 123.456), atol=1e-9)


def test_forward_order_insensitive():
    # mean pooling ignores gram order: permuting the bag changes nothing
    config = SMALL
    idx, w = hashed_bag("kenji yamamoto", config.ngrams)
    perm = np.argsort(-idx)
    model = train(["aaaa", "bbbb"], ["A", "B"], config)
    h1 = w @ model.embeddings[idx]
    h2 = w[perm] @ model.embeddings[idx[perm]]
    assert np.allclose(h1, h2, atol=1e-12)


def test_training_deterministic():
    names = ["aaaa", "bbbb", "cccc", "dddd", "eeee", "ffff"]
    labels = ["A", "B", "C", "A", "B", "C"]
    m1 = train(names, labels, SMALL)
    m2 = train(names, labels, SMALL)
    assert np.array_equal(m1.embeddings, m2.embeddings)
    assert np.array_equal(m1.output, m2.output)
    assert np.array_equal(m1.bias, m2.bias)


def _random_samples(rng: SplitMix64, n_samples: int, buckets: int, n_classes: int):
    samples = []
    for _ in range(n_samples):
        k = 2 + rng.next_below(4)
        idx = []
        while len(idx) < k:
            cand = rng.next_below(buckets)
            if cand not in idx:
                idx.append(cand)
        w = np.array([rng.uniform(0.1, 1.0) for _ in range(k)])
        w /= w.sum()
        samples.append((np.array(idx, dtype=np.int64), w, rng.next_below(n_classes)))
    return samples


def test_backprop_matches_central_differences_100_trials():
    buckets, dim, n_classes = 12, 5, 4
    rng = SplitMix64(77)
    failures = 0
    for _ in range(100):
        emb = np.array([[rng.uniform(-0.5, 0.5) for _ in range(dim)] for _ in range(buckets)])
        out = np.array([[rng.uniform(-0.5, 0.5) for _ in range(n_classes)] for _ in range(dim)])
        bias = np.array([rng.uniform(-0.2, 0.2) for _ in range(n_classes)])
        samples = _random_samples(rng, 3, buckets, n_classes)
        _, g_emb, g_out, g_bias = loss_and_grads(emb, out, bias, samples)

        eps = 1e-5

        def check(param, grad, setter):
            flat_grad = grad.ravel()
            flat = param.ravel()
            for pos in range(flat.size):
                orig = flat[pos]
                flat[pos] = orig + eps
                up = loss_and_grads(emb, out, bias, samples)[0]
                flat[pos] = orig - eps
                down = loss_and_grads(emb, out, bias, samples)[0]
                flat[pos] = orig
                fd = (up - down) / (2 * eps)
                denom = max(abs(fd), abs(flat_grad[pos]), 1e-3)
                if abs(fd - flat_grad[pos]) / denom >= 1e-4:
                    return False
            return True

        ok = check(emb, g_emb, None) and check(out, g_out, None) and check(bias, g_bias, None)
        if not ok:
            failures += 1
    assert failures == 0


def test_save_load_round_trip_checks_hash_and_buckets(tmp_path):
    model = train(["aaaa", "bbbb"], ["A", "B"], SMALL)
    path = tmp_path / "shallow.npz"
    model.save(path)
    loaded = ShallowModel.load(path)
    assert loaded.classes == model.classes
    assert np.array_equal(loaded.embeddings, model.embeddings)
    assert loaded.config == model.config
