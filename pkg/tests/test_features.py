import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nameorigin.errors import DimensionMismatch
from nameorigin.features import (
    NgramConfig,
    Vocabulary,
    extract_ngrams,
    fit_vocabulary,
    hash_ngrams,
    hashed_bag,
    transform,
)

from oracles import oracle_ngram_count

names_strategy = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu"), max_codepoint=0x24F),
    min_size=1,
    max_size=24,
)


def test_extract_examples():
    assert sorted(extract_ngrams("ab", NgramConfig(1, 2, 10))) == ["a", "ab", "b"]
    assert extract_ngrams("Lee", NgramConfig(1, 1, 10, lowercase=True)) == ["l", "e", "e"]
    assert len(extract_ngrams("abcd", NgramConfig(1, 4, 10))) == 10


def test_extract_includes_spaces():
    grams = extract_ngrams("a b", NgramConfig(2, 2, 10))
    assert "a " in grams and " b" in grams


@given(names_strategy, st.integers(1, 3), st.integers(0, 4))
def test_extract_count_formula(name, n_min, extra):
    n_max = min(n_min + extra, 8)
    config = NgramConfig(n_min, n_max, 10)
    # the formula applies to the string actually gram'd (lowercasing can
    # change the length of exotic code points)
    assert len(extract_ngrams(name, config)) == oracle_ngram_count(name.lower(), n_min, n_max)
    raw = NgramConfig(n_min, n_max, 10, lowercase=False)
    assert len(extract_ngrams(name, raw)) == oracle_ngram_count(name, n_min, n_max)


def test_fit_vocabulary_idf_of_universal_gram():
    vocab = fit_vocabulary(["aa", "ab", "ac"], NgramConfig(1, 1, 100))
    # "a" appears in every name: idf = ln((1+3)/(1+3)) + 1 = 1
    assert math.isclose(vocab.idf[vocab.gram_to_index["a"]], 1.0)


def test_fit_vocabulary_max_features_prefers_high_df():
    vocab = fit_vocabulary(["ab", "ab", "cd"], NgramConfig(2, 2, 1))
    assert set(vocab.gram_to_index) == {"ab"}


def test_fit_vocabulary_matches_bruteforce_df_sort():
    names = ["kato", "sato", "kimura", "tanaka", "saito", "kudo"]
    config = NgramConfig(1, 3, 12)
    vocab = fit_vocabulary(names, config)
    df: dict[str, int] = {}
    for name in names:
        for gram in set(extract_ngrams(name, config)):
            df[gram] = df.get(gram, 0) + 1
    expected = set(sorted(df, key=lambda g: (-df[g], g))[:12])
    assert set(vocab.gram_to_index) == expected


def test_transform_oov_is_zero_vector():
    vocab = fit_vocabulary(["aaa"], NgramConfig(1, 2, 10))
    vec = transform("zzz", vocab)
    assert vec.nnz == 0
    assert vec.norm() == 0.0


def test_transform_single_gram_weight_one():
    vocab = fit_vocabulary(["ab", "cd"], NgramConfig(2, 2, 10))
    vec = transform("ab", vocab)
    assert vec.nnz == 1
    assert math.isclose(vec.values[0], 1.0)


@given(names_strategy)
def test_transform_norm_is_zero_or_one(name):
    vocab = fit_vocabulary(["kato", "sato", "kimura"], NgramConfig(1, 3, 50))
    vec = transform(name, vocab)
    assert vec.norm() == 0.0 or math.isclose(vec.norm(), 1.0, abs_tol=1e-9)


def test_transform_idempotent():
    vocab = fit_vocabulary(["kato", "sato"], NgramConfig(1, 2, 50))
    a = transform("kato", vocab)
    b = transform("kato", vocab)
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.values, b.values)


def test_fit_independent_of_record_order():
    config = NgramConfig(1, 2, 8)
    a = fit_vocabulary(["kato", "sato", "naito"], config)
    b = fit_vocabulary(["naito", "kato", "sato"], config)
    assert a.gram_to_index == b.gram_to_index
    assert np.allclose(a.idf, b.idf)


def test_hash_ngrams_deterministic_and_bounded():
    config = NgramConfig(2, 5, 1, hashing_buckets=64)
    a = hash_ngrams("yamamoto", config)
    b = hash_ngrams("yamamoto", config)
    assert a == b
    assert all(0 <= i < 64 for i in a)
    assert len(a) == oracle_ngram_count("yamamoto", 2, 5)


def test_hash_ngrams_single_bucket():
    config = NgramConfig(2, 3, 1, hashing_buckets=1)
    assert set(hash_ngrams("abcdef", config)) == {0}


def test_hash_ngrams_requires_buckets():
    with pytest.raises(DimensionMismatch):
        hash_ngrams("ab", NgramConfig(2, 3, 5))


def test_hash_portable_test_vectors():
    # FNV-1a 64 of "ab" is 0x089c4407b545986a; mod 97 pins portability.
    config = NgramConfig(2, 2, 1, hashing_buckets=97)
    assert hash_ngrams("ab", config) == [0x089C4407B545986A % 97]


def test_hashed_bag_weights_sum_to_one():
    config = NgramConfig(2, 5, 1, hashing_buckets=32)
    idx, weights = hashed_bag("yamamoto kenji", config)
    assert math.isclose(weights.sum(), 1.0)
    assert len(set(idx.tolist())) == len(idx)
    empty_idx, empty_w = hashed_bag("a", config)
    assert empty_idx.size == 0 and empty_w.size == 0


def test_vocabulary_json_round_trip(tmp_path):
    vocab = fit_vocabulary(["kato", "sato", "kimura"], NgramConfig(1, 3, 20))
    path = tmp_path / "vocab.json"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.gram_to_index == vocab.gram_to_index
    assert np.allclose(loaded.idf, vocab.idf)
    assert loaded.fitted_on == vocab.fitted_on
    assert loaded.config == vocab.config
