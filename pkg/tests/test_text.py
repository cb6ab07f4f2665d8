import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tkrank.text import (
    OOV_ID,
    PAD_ID,
    EmbeddingFormatError,
    EmptySequenceError,
    build_vocabulary,
    collate,
    encode_sequence,
    load_embeddings,
    random_embedding_rows,
    read_collection,
    read_triples,
    tokenize,
    write_embeddings,
    write_tsv,
)


class TestTokenize:
    def test_examples(self):
        assert tokenize("The androgen receptor (AR),") == ["the", "androgen", "receptor", "(", "ar", ")", ","]
        assert tokenize("") == []
        assert tokenize("do goldfish grow") == ["do", "goldfish", "grow"]

    def test_unicode_whitespace_and_punctuation(self):
        assert tokenize("Café “x”\tY!") == ["café", "“", "x", "”", "y", "!"]

    @given(st.text())
    def test_no_empty_tokens_and_lowercase(self, text):
        toks = tokenize(text)
        assert all(toks)
        assert all(not any(c.isspace() for c in t) for t in toks)
        assert tokenize(" ".join(toks)) == toks


class TestVocabulary:
    def test_threshold_is_inclusive(self):
        corpus = ["a a a a a b b b b c"]
        vocab = build_vocabulary(corpus, 5)
        assert "a" in vocab and vocab.id("a") == 2
        assert "b" not in vocab and vocab.id("b") == OOV_ID
        assert vocab.id("never") == OOV_ID

    def test_threshold_one_keeps_everything_ordered_by_frequency(self):
        vocab = build_vocabulary(["b a b", "c a b"], 1)
        assert vocab.terms == ["<pad>", "<oov>", "b", "a", "c"]

    def test_empty_corpus(self):
        vocab = build_vocabulary([], 5)
        assert len(vocab) == 2

    @given(st.lists(st.text(alphabet="abcde ", max_size=12), max_size=8), st.randoms())
    def test_order_insensitive_membership(self, corpus, rnd):
        shuffled = list(corpus)
        rnd.shuffle(shuffled)
        a, b = build_vocabulary(corpus, 2), build_vocabulary(shuffled, 2)
        assert set(a.terms) == set(b.terms)
        assert all(i >= 2 for t, i in a.index.items() if t not in ("<pad>", "<oov>"))


class TestEmbeddings:
    def test_load_and_random_fill(self, tmp_path):
        vocab = build_vocabulary(["x y z"], 1)
        path = tmp_path / "vec.txt"
        path.write_text("x 1.0 2.0 3.0\nzzz 9 9 9\nz -1 0.5 0.25\n", encoding="utf-8")
        table = load_embeddings(path, vocab, 3, seed=7)
        assert table.matrix.shape == (len(vocab), 3)
        assert np.array_equal(table.matrix[vocab.id("x")], [1.0, 2.0, 3.0])
        assert np.array_equal(table.matrix[vocab.id("z")], [-1.0, 0.5, 0.25])
        expected = random_embedding_rows(len(vocab), 3, 7)
        assert np.array_equal(table.matrix[vocab.id("y")], expected[vocab.id("y")])
        assert np.all(np.abs(expected) <= 0.05)
        assert np.array_equal(table.matrix[PAD_ID], np.zeros(3))

    def test_round_trip_writer(self, tmp_path):
        vocab = build_vocabulary(["p q"], 1)
        rows = np.random.default_rng(0).normal(size=(len(vocab), 4))
        write_embeddings(tmp_path / "v.txt", vocab.terms[2:], rows[2:])
        table = load_embeddings(tmp_path / "v.txt", vocab, 4)
        assert np.array_equal(table.matrix[2:], rows[2:])

    def test_dimension_mismatch(self, tmp_path):
        vocab = build_vocabulary(["x"], 1)
        path = tmp_path / "vec.txt"
        path.write_text("x 1 2\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match="d_emb"):
            load_embeddings(path, vocab, 3)

    def test_malformed_line_reports_line_number(self, tmp_path):
        vocab = build_vocabulary(["x"], 1)
        path = tmp_path / "vec.txt"
        path.write_text("x 1 2 3\ny 1 2\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match="line 2"):
            load_embeddings(path, vocab, 3)


class TestEncode:
    vocab = build_vocabulary(["w " * 3], 1)

    def test_cap(self):
        seq = encode_sequence(" ".join(["w"] * 250), self.vocab, 200)
        assert len(seq.ids) == 200 and seq.true_length == 200
        seq = encode_sequence(" ".join(["w"] * 900), self.vocab, 800)
        assert seq.true_length == 800
        assert encode_sequence("w w unknown w w", self.vocab, 30).true_length == 5

    def test_empty_text(self, caplog):
        with pytest.raises(EmptySequenceError):
            encode_sequence("   ", self.vocab, 30)
        assert encode_sequence("", self.vocab, 30, strict=False) is None
        assert "no tokens" in caplog.text

    @given(st.text(alphabet="wx ,.", max_size=60), st.integers(1, 20))
    def test_reencoding_keeps_true_length(self, text, cap):
        seq = encode_sequence(text, self.vocab, cap, strict=False)
        if seq is None:
            return
        again = encode_sequence(" ".join(seq.tokens), self.vocab, cap)
        assert again.true_length == seq.true_length
        assert 1 <= seq.true_length <= cap

    def test_collate(self):
        a = encode_sequence("w w w", self.vocab, 10)
        b = encode_sequence("w", self.vocab, 10)
        ids, mask, lengths = collate([a, b], 5)
        assert ids.shape == (2, 5)
        assert np.array_equal(mask[1], [1, 0, 0, 0, 0])
        assert np.array_equal(ids[1, 1:], [0, 0, 0, 0])
        assert list(lengths) == [3, 1]
        with pytest.raises(ValueError):
            collate([a], 2)


def test_tsv_round_trip(tmp_path):
    write_tsv(tmp_path / "c.tsv", [("d1", "hello world"), ("d2", "x")])
    assert read_collection(tmp_path / "c.tsv") == {"d1": "hello world", "d2": "x"}
    (tmp_path / "t.tsv").write_text("q\tp\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        read_triples(tmp_path / "t.tsv")
