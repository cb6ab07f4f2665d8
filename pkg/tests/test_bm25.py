import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from helpers import random_text, word_list
from tkrank import bm25
from tkrank.text import tokenize


def test_fixture_and_absent_term():
    index = bm25.InvertedIndex.build({"d1": "a b a", "d2": "c"})
    assert index.idf("a") == pytest.approx(math.log(2.0))
    assert index.avgdl == 2.0
    assert bm25.bm25_score(["a"], "d1", index) == pytest.approx(0.8552, abs=5e-5)
    assert bm25.bm25_score(["zzz"], "d1", index) == 0.0
    assert bm25.bm25_score(["c"], "d1", index) == 0.0
    one = bm25.bm25_score(["a"], "d1", index)
    assert bm25.bm25_score(["a", "a"], "d1", index) == 2 * one
    with pytest.raises(KeyError):
        bm25.bm25_score(["a"], "d9", index)


def test_search_ties_go_to_smaller_id():
    index = bm25.InvertedIndex.build({"10": "x y", "9": "x y", "b": "x y", "a": "x y", "z": "q"})
    assert [d for d, _ in bm25.search("x", index, 10)] == ["9", "10", "a", "b"]
    assert len(bm25.search("x", index, 2)) == 2
    assert bm25.search("nothing", index, 5) == []
    with pytest.raises(ValueError):
        bm25.search("x", index, 0)


def _corpus(seed, n=100):
    rng = np.random.default_rng(seed)
    words = word_list(40, "w")
    return {f"doc{i}": random_text(rng, words, int(rng.integers(1, 30))) for i in range(n)}, words, rng


@given(st.integers(0, 1000))
def test_search_matches_brute_force_ranking(seed):
    collection, words, rng = _corpus(seed, 30)
    index = bm25.InvertedIndex.build(collection)
    tokens = {d: tokenize(t) for d, t in collection.items()}
    query = random_text(rng, words, int(rng.integers(1, 4)))
    terms = tokenize(query)
    brute = [(d, oracles.naive_bm25(terms, tokens, d)) for d in collection if set(terms) & set(tokens[d])]
    brute.sort(key=lambda x: (-x[1], bm25.doc_id_key(x[0])))
    assert bm25.search(query, index, 1000) == brute
    k = int(rng.integers(1, 10))
    assert bm25.search(query, index, k) == brute[:k]  # shared prefix is stable in k


def test_index_round_trip(tmp_path):
    collection, _, _ = _corpus(1, 20)
    index = bm25.InvertedIndex.build(collection)
    index.save(tmp_path / "idx")
    loaded = bm25.InvertedIndex.load(tmp_path / "idx")
    assert loaded.doc_ids == index.doc_ids
    assert np.array_equal(loaded.doc_lengths, index.doc_lengths)
    for q in ("w1 w2", "w3", "w5 w5 w9"):
        assert bm25.search(q, loaded, 50) == bm25.search(q, index, 50)
    index.save(tmp_path / "idx2")
    assert (tmp_path / "idx").read_bytes() == (tmp_path / "idx2").read_bytes()


def test_postings_sorted_and_lengths_match():
    collection, _, _ = _corpus(2, 25)
    index = bm25.InvertedIndex.build(collection)
    for p in index.postings.values():
        assert np.all(np.diff(p.docs) > 0)
    for d, text in collection.items():
        assert index.doc_lengths[index.number[d]] == len(tokenize(text))


def test_load_rejects_other_files(tmp_path):
    (tmp_path / "junk").write_bytes(b"not an index")
    with pytest.raises(ValueError):
        bm25.InvertedIndex.load(tmp_path / "junk")


def test_empty_collection_rejected():
    with pytest.raises(ValueError):
        bm25.InvertedIndex.build({})
