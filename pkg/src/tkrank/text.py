"""Tokenization, vocabulary, embedding loading and capped sequence encoding."""

from __future__ import annotations

import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

PAD_ID = 0
OOV_ID = 1
PAD_TOKEN = "<pad>"
OOV_TOKEN = "<oov>"


class EmptySequenceError(ValueError):
    pass


class EmbeddingFormatError(ValueError):
    pass


def _is_punct(ch):
    return unicodedata.category(ch).startswith("P")


def tokenize(text):
    """Lowercase, split on whitespace and split punctuation off as single tokens.

    >>> tokenize("The androgen receptor (AR),")
    ['the', 'androgen', 'receptor', '(', 'ar', ')', ',']
    """
    tokens = []
    for chunk in text.lower().split():
        buf = []
        for ch in chunk:
            if _is_punct(ch):
                if buf:
                    tokens.append("".join(buf))
                    buf = []
                tokens.append(ch)
            else:
                buf.append(ch)
        if buf:
            tokens.append("".join(buf))
    return tokens


@dataclass
class Vocabulary:
    """Term to id map with 0 reserved for padding and 1 for out-of-vocabulary terms."""

    terms: list  # id -> term, including the two reserved entries
    min_occurrence: int = 1
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.terms[:2] != [PAD_TOKEN, OOV_TOKEN]:
            raise ValueError("vocabulary must start with the padding and OOV entries")
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("duplicate terms in vocabulary")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return self.index.get(term, OOV_ID) >= 2

    def id(self, term):
        i = self.index.get(term, OOV_ID)
        return i if i >= 2 else OOV_ID


def build_vocabulary(corpus, min_occurrence=5):
    """Keep every term occurring at least ``min_occurrence`` times in ``corpus``.

    ``corpus`` yields raw document strings. Ids are assigned by descending
    frequency with ties broken lexicographically.
    """
    if min_occurrence < 1:
        raise ValueError("min_occurrence must be >= 1")
    counts = Counter()
    for text in corpus:
        counts.update(tokenize(text))
    kept = [t for t, c in counts.items() if c >= min_occurrence and t not in (PAD_TOKEN, OOV_TOKEN)]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary([PAD_TOKEN, OOV_TOKEN] + kept, min_occurrence)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray  # |V| x d_emb, row 0 all zeros
    trainable: bool = True

    @property
    def d_emb(self):
        return self.matrix.shape[1]


def random_embedding_rows(n_rows, d_emb, seed, scale=0.05):
    """The seeded uniform(-scale, scale) draw used for rows absent from the vector file."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, size=(n_rows, d_emb))


def load_embeddings(path, vocab, d_emb, seed=0):
    """Read a whitespace-separated vector file into a table aligned with ``vocab``.

    Terms missing from the file keep a seeded uniform(-0.05, 0.05) vector;
    file terms outside the vocabulary are ignored; the padding row is zero.
    """
    matrix = random_embedding_rows(len(vocab), d_emb, seed)
    first = True
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            n_floats = len(parts) - 1
            if n_floats != d_emb:
                if first:
                    raise EmbeddingFormatError(
                        f"{path}: line {lineno}: vectors have {n_floats} dimensions, expected d_emb={d_emb}"
                    )
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: expected {d_emb} floats, got {n_floats}"
                )
            first = False
            i = vocab.index.get(parts[0])
            if i is None or i < 2:
                continue
            try:
                matrix[i] = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}: line {lineno}: {exc}") from None
    matrix[PAD_ID] = 0.0
    return EmbeddingTable(matrix)


@dataclass
class TokenSequence:
    ids: list
    true_length: int
    cap: int
    tokens: list = field(default_factory=list)  # surface terms, for display only

    def __len__(self):
        return self.true_length


def encode_sequence(text, vocab, cap, strict=True):
    """Tokenize, map to ids and truncate to ``cap`` tokens.

    Text with no tokens raises :class:`EmptySequenceError` when ``strict``
    (training); otherwise a warning is logged and ``None`` returned.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    tokens = tokenize(text)[:cap]
    if not tokens:
        if strict:
            raise EmptySequenceError(f"text {text!r} contains no tokens")
        log.warning("skipping text with no tokens: %r", text)
        return None
    ids = [vocab.id(t) for t in tokens]
    return TokenSequence(ids, len(ids), cap, tokens)


def collate(seqs, length=None):
    """Stack sequences into ``(ids, mask, lengths)`` padded to ``length`` (default: longest)."""
    lengths = np.array([s.true_length for s in seqs], dtype=np.int64)
    width = int(lengths.max()) if length is None else int(length)
    if width < lengths.max():
        raise ValueError("collate length shorter than a sequence")
    ids = np.zeros((len(seqs), width), dtype=np.int64)
    for row, s in enumerate(seqs):
        ids[row, : s.true_length] = s.ids[: s.true_length]
    mask = (np.arange(width)[None, :] < lengths[:, None]).astype(np.float64)
    return ids, mask, lengths


# -- TSV interchange -------------------------------------------------------------


def _read_tsv(path, n_fields):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_fields:
                raise ValueError(f"{path}: line {lineno}: expected {n_fields} tab-separated fields, got {len(parts)}")
            rows.append(parts)
    return rows


def read_collection(path):
    """``doc_id<TAB>text`` lines as an ordered dict."""
    return {doc_id: text for doc_id, text in _read_tsv(path, 2)}


def read_queries(path):
    return {qid: text for qid, text in _read_tsv(path, 2)}


def read_triples(path):
    """``query<TAB>positive<TAB>negative`` text triples."""
    return [tuple(row) for row in _read_tsv(path, 3)]


def write_tsv(path, rows):
    Path(path).write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")


def write_embeddings(path, terms, rows):
    """Write ``term v1 v2 ...`` lines readable by :func:`load_embeddings`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for term, row in zip(terms, rows):
            fh.write(term + " " + " ".join(repr(float(x)) for x in row) + "\n")
