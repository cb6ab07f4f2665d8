"""Seeded synthetic corpora with a planted relevance signal.

Every query carries a unique marker token that appears only in its relevant
documents. Documents are padded with filler drawn from one pool and queries
with filler from a disjoint pool, so the marker is the only term a query
shares with any document and exact matching separates the classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import Qrels, RunList


@dataclass
class MarkerCorpus:
    collection: dict  # docid -> text
    queries: dict  # qid -> text
    triples: list  # (query text, positive text, negative text)
    qrels: Qrels
    candidates: RunList  # per query: relevant docs mixed into random negatives


def marker_corpus(n_docs=100, n_queries=50, n_triples=200, n_candidates=20, n_filler=200,
                  doc_len=(20, 40), query_filler=2, seed=0):
    rng = np.random.default_rng(seed)
    filler = [f"w{i:03d}" for i in range(n_filler)]
    markers = [f"m{q:02d}" for q in range(n_queries)]

    query_pool = [f"v{i:03d}" for i in range(n_filler)]

    def words(n, pool=filler):
        return [pool[i] for i in rng.integers(0, n_filler, n)]

    owner = {f"d{i}": i % n_queries for i in range(n_docs)}
    collection = {}
    for docid, q in owner.items():
        body = words(int(rng.integers(doc_len[0], doc_len[1] + 1)))
        body.insert(int(rng.integers(0, len(body) + 1)), markers[q])
        collection[docid] = " ".join(body)
    queries = {f"q{q}": " ".join([markers[q]] + words(query_filler, query_pool)) for q in range(n_queries)}
    relevant = {f"q{q}": [d for d, o in owner.items() if o == q] for q in range(n_queries)}
    qrels = Qrels({qid: {d: 1 for d in docs} for qid, docs in relevant.items()})

    docids = list(collection)
    triples = []
    qids = list(queries)
    for t in range(n_triples):
        qid = qids[t % n_queries]
        pos = relevant[qid][int(rng.integers(0, len(relevant[qid])))]
        while True:
            neg = docids[int(rng.integers(0, n_docs))]
            if neg not in relevant[qid]:
                break
        triples.append((queries[qid], collection[pos], collection[neg]))

    rankings = {}
    for qid in qids:
        others = [d for d in docids if d not in relevant[qid]]
        picked = list(rng.choice(others, size=n_candidates - len(relevant[qid]), replace=False))
        cands = picked + relevant[qid]
        order = rng.permutation(len(cands))
        rankings[qid] = [(str(cands[i]), float(len(cands) - r)) for r, i in enumerate(order)]
    return MarkerCorpus(collection, queries, triples, qrels, RunList(rankings, "random"))


def embedding_matrix(vocab_size, d_emb, seed=0, scale=1.0):
    """Stand-in for pre-trained vectors: seeded N(0, scale^2) rows, zero padding row."""
    rows = np.random.default_rng(seed).normal(0.0, scale, (vocab_size, d_emb))
    rows[0] = 0.0
    return rows


def write_workspace(directory, corpus, run_config, seed=0):
    """Write the corpus as TSV/TREC files plus a vector file and config; returns the paths."""
    from pathlib import Path

    from .config import dump_config
    from .metrics import format_qrels, write_run
    from .text import build_vocabulary, write_embeddings, write_tsv

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {name: d / fname for name, fname in (
        ("collection", "collection.tsv"), ("queries", "queries.tsv"), ("triples", "triples.tsv"),
        ("qrels", "qrels.txt"), ("run", "candidates.run"), ("vectors", "vectors.txt"), ("config", "tk.conf"),
    )}
    write_tsv(paths["collection"], corpus.collection.items())
    write_tsv(paths["queries"], corpus.queries.items())
    write_tsv(paths["triples"], corpus.triples)
    paths["qrels"].write_text(format_qrels(corpus.qrels), encoding="utf-8")
    write_run(paths["run"], corpus.candidates)
    vocab = build_vocabulary(corpus.collection.values(), run_config.model.min_occurrence)
    rows = embedding_matrix(len(vocab), run_config.model.d_emb, seed)
    write_embeddings(paths["vectors"], vocab.terms[2:], rows[2:])
    paths["config"].write_text(dump_config(run_config), encoding="utf-8")
    return paths
