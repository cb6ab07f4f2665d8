"""Shared fixtures: tiny models and seeded corpora."""

from tkrank import tensor as T
from tkrank.config import TKConfig, WindowConfig
from tkrank.model import TKModel
from tkrank.synthetic import embedding_matrix
from tkrank.text import build_vocabulary, collate

TINY_CORPUS = [
    "the androgen receptor binds androgen",
    "do goldfish grow in a small tank",
    "receptor signal grows with dose",
    "goldfish tank water the small fish",
]
TINY_QUERY = "do goldfish grow fast"  # 4 tokens, "fast" is OOV
TINY_DOC = "goldfish grow in a small tank"  # 6 tokens


def tiny_model(seed=0, windowed=False, window=None, emb_scale=1.0, **overrides):
    config = TKConfig.tiny(windowed=windowed, **overrides)
    vocab = build_vocabulary(TINY_CORPUS, 1)
    emb = embedding_matrix(len(vocab), config.d_emb, seed + 100, emb_scale)
    return TKModel.create(config, vocab, seed=seed, embeddings=emb, window=window)


def small_model(corpus, seed=0, windowed=False, window=None, **overrides):
    config = TKConfig.small(windowed=windowed, **overrides)
    vocab = build_vocabulary(corpus, 1)
    emb = embedding_matrix(len(vocab), config.d_emb, seed + 100)
    return TKModel.create(config, vocab, seed=seed, embeddings=emb, window=window or WindowConfig())


def score_loss(model, queries, docs):
    """Zero-argument closure summing the batch scores, for gradient checks."""
    q_ids, q_mask, _ = collate(queries)
    d_ids, d_mask, _ = collate(docs)
    return lambda: T.sum(model.run_batch(q_ids, q_mask, d_ids, d_mask).scores.s)


def random_text(rng, words, n):
    return " ".join(words[i] for i in rng.integers(0, len(words), n))


def word_list(n, prefix="t"):
    return [f"{prefix}{i}" for i in range(n)]


def single_window(size):
    return WindowConfig(sizes=(size,), strides=(size,), top_r=1)


