"""BM25 inverted index for first-stage candidate retrieval."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .container import read_container, write_container
from .text import tokenize

MAGIC = b"TKINDEX\x00"
INDEX_VERSION = 1

_DIGITS = re.compile(r"^\d+$")


def doc_id_key(doc_id):
    """Ascending doc-id order: numeric ids by value first, then the rest lexicographically."""
    return (0, int(doc_id), "") if _DIGITS.match(doc_id) else (1, 0, doc_id)


@dataclass
class Posting:
    docs: np.ndarray  # internal doc numbers, ascending
    tfs: np.ndarray  # float64 term frequencies


class InvertedIndex:
    """Term -> postings over documents numbered in ascending doc-id order."""

    def __init__(self, doc_ids, doc_lengths, postings):
        if not doc_ids:
            raise ValueError("an index needs at least one document")
        self.doc_ids = list(doc_ids)
        self.doc_lengths = np.asarray(doc_lengths, dtype=np.float64)
        self.postings = postings
        self.number = {d: i for i, d in enumerate(self.doc_ids)}
        self.avgdl = float(self.doc_lengths.sum() / len(self.doc_ids))

    @property
    def n_docs(self):
        return len(self.doc_ids)

    def df(self, term):
        p = self.postings.get(term)
        return 0 if p is None else len(p.docs)

    def idf(self, term):
        df = self.df(term)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    @classmethod
    def build(cls, collection):
        """Index a ``doc_id -> text`` mapping."""
        doc_ids = sorted(collection, key=doc_id_key)
        lengths = []
        acc = {}
        for number, doc_id in enumerate(doc_ids):
            terms = tokenize(collection[doc_id])
            lengths.append(len(terms))
            for term, tf in Counter(terms).items():
                acc.setdefault(term, ([], []))
                acc[term][0].append(number)
                acc[term][1].append(tf)
        postings = {
            t: Posting(np.asarray(d, dtype=np.int64), np.asarray(f, dtype=np.float64))
            for t, (d, f) in acc.items()
        }
        return cls(doc_ids, lengths, postings)

    def save(self, path):
        terms = sorted(self.postings)
        header = {
            "version": INDEX_VERSION,
            "doc_ids": self.doc_ids,
            "terms": terms,
            "posting_sizes": [len(self.postings[t].docs) for t in terms],
        }
        docs = np.concatenate([self.postings[t].docs for t in terms]) if terms else np.zeros(0)
        tfs = np.concatenate([self.postings[t].tfs for t in terms]) if terms else np.zeros(0)
        write_container(path, MAGIC, header, {
            "doc_lengths": self.doc_lengths,
            "posting_docs": docs.astype(np.float64),
            "posting_tfs": tfs,
        })

    @classmethod
    def load(cls, path):
        header, arrays = read_container(path, MAGIC)
        if header.get("version") != INDEX_VERSION:
            raise ValueError(f"{path}: unsupported index version {header.get('version')}")
        postings, pos = {}, 0
        docs, tfs = arrays["posting_docs"], arrays["posting_tfs"]
        for term, size in zip(header["terms"], header["posting_sizes"]):
            postings[term] = Posting(docs[pos:pos + size].astype(np.int64), tfs[pos:pos + size].copy())
            pos += size
        return cls(header["doc_ids"], arrays["doc_lengths"], postings)


def _term_weight(tf, dl, idf, k1, b, avgdl):
    return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))


def bm25_score(query_terms, doc_id, index, k1=0.9, b=0.4):
    """BM25 of one document, summing over query terms in order (repeats count)."""
    number = index.number.get(doc_id)
    if number is None:
        raise KeyError(f"unknown doc id {doc_id!r}")
    dl = float(index.doc_lengths[number])
    total = 0.0
    for term in query_terms:
        p = index.postings.get(term)
        if p is None:
            continue
        pos = np.searchsorted(p.docs, number)
        if pos < len(p.docs) and p.docs[pos] == number:
            total += _term_weight(float(p.tfs[pos]), dl, index.idf(term), k1, b, index.avgdl)
    return total


def score_all(query_terms, index, k1=0.9, b=0.4):
    """Scores of every document plus a flag for documents matching any term."""
    scores = np.zeros(index.n_docs)
    matched = np.zeros(index.n_docs, dtype=bool)
    for term in query_terms:
        p = index.postings.get(term)
        if p is None:
            continue
        kernels.bm25_accumulate(scores, p.docs, p.tfs, index.doc_lengths, index.idf(term), k1, b, index.avgdl)
        matched[p.docs] = True
    return scores, matched


def search(query, index, k, k1=0.9, b=0.4):
    """Top-``k`` ``(doc_id, score)`` by BM25; ties go to the smaller doc id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = tokenize(query) if isinstance(query, str) else list(query)
    scores, matched = score_all(terms, index, k1, b)
    candidates = np.flatnonzero(matched)
    # doc numbers already follow doc-id order, so a stable sort on -score breaks ties correctly
    order = candidates[np.argsort(-scores[candidates], kind="stable")][:k]
    return [(index.doc_ids[i], float(scores[i])) for i in order]
