"""The Transformer-Kernel scoring network.

Query and document are contextualized independently with shared weights,
matched in a single cosine match matrix, softly histogrammed by Gaussian
kernels and pooled along a log-normalized and a length-normalized path.

All batch functions take padded id matrices ``(B, L)`` with 0/1 masks; the
single-pair entry points (:meth:`TKModel.forward`, :func:`explain`) run one
pair at a time so their scores never depend on batch composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import tensor as T
from .config import ConfigError, WindowConfig
from .tensor import Parameter, no_grad
from .text import PAD_ID, collate, encode_sequence, random_embedding_rows
from .windowed import rank_order, window_arrays


class ScoringError(ValueError):
    pass


# -- parameters ----------------------------------------------------------------------

LAYER_FIELDS = ("ff_w1", "ff_b1", "ff_w2", "ff_b2", "wq", "wk", "wv", "wo")


@dataclass
class LayerParams:
    """One contextualization layer.

    ``wq``/``wk``/``wv`` hold the per-head projections side by side: columns
    ``i*d_k:(i+1)*d_k`` belong to head ``i``.
    """

    ff_w1: Parameter
    ff_b1: Parameter
    ff_w2: Parameter
    ff_b2: Parameter
    wq: Parameter
    wk: Parameter
    wv: Parameter
    wo: Parameter


@dataclass
class TKParameters:
    embedding: Parameter
    layers: list
    alpha_raw: Parameter
    w_log: Parameter
    w_len: Parameter
    beta: Parameter
    gamma: Parameter
    rank_weights: Parameter | None = None

    def named(self):
        """All parameters in a stable order."""
        out = [self.embedding]
        for layer in self.layers:
            out.extend(getattr(layer, f) for f in LAYER_FIELDS)
        out += [self.alpha_raw, self.w_log, self.w_len, self.beta, self.gamma]
        if self.rank_weights is not None:
            out.append(self.rank_weights)
        return out

    def state(self):
        return {p.name: p.data.copy() for p in self.named()}

    def load_state(self, state):
        for p in self.named():
            src = state[p.name]
            if src.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {p.name}: {src.shape} vs {p.data.shape}")
            p.data[...] = src

    @classmethod
    def from_arrays(cls, arrays, config, windowed):
        def P(name, group):
            return Parameter(name, arrays[name], group)

        layers = [
            LayerParams(*(P(f"layer{i}.{f}", "A") for f in LAYER_FIELDS)) for i in range(config.layers)
        ]
        return cls(
            embedding=P("embedding", "A"),
            layers=layers,
            alpha_raw=P("alpha_raw", "A"),
            w_log=P("w_log", "B"),
            w_len=P("w_len", "B"),
            beta=P("beta", "B"),
            gamma=P("gamma", "B"),
            rank_weights=P("rank_weights", "B") if windowed else None,
        )

    @classmethod
    def init(cls, config, vocab_size, seed=0, embeddings=None, window=None):
        """Seeded initialization.

        Projections draw from uniform(+-1/sqrt(d_emb)), feed-forward weights from
        uniform(+-1/sqrt(fan_in)) with zero biases, kernel weights from
        uniform(+-0.01); alpha_raw = 0, beta = gamma = 0.5, rank weights 1/r.
        """
        rng = np.random.default_rng(seed)
        d, dk, h, dff = config.d_emb, config.head_dim, config.heads, config.ff_dim
        if embeddings is None:
            emb = random_embedding_rows(vocab_size, d, seed)
        else:
            emb = np.array(embeddings, dtype=np.float64)
            if emb.shape != (vocab_size, d):
                raise ValueError(f"embedding matrix shape {emb.shape} != {(vocab_size, d)}")
        emb[PAD_ID] = 0.0
        arrays = {"embedding": emb}
        lim = 1.0 / math.sqrt(d)
        for i in range(config.layers):
            arrays[f"layer{i}.ff_w1"] = rng.uniform(-lim, lim, (d, dff))
            arrays[f"layer{i}.ff_b1"] = np.zeros(dff)
            arrays[f"layer{i}.ff_w2"] = rng.uniform(-1 / math.sqrt(dff), 1 / math.sqrt(dff), (dff, d))
            arrays[f"layer{i}.ff_b2"] = np.zeros(d)
            for name in ("wq", "wk", "wv"):
                arrays[f"layer{i}.{name}"] = rng.uniform(-lim, lim, (d, h * dk))
            arrays[f"layer{i}.wo"] = rng.uniform(-lim, lim, (h * dk, d))
        k = config.n_kernels
        arrays["alpha_raw"] = np.zeros(1)
        arrays["w_log"] = rng.uniform(-0.01, 0.01, (k, 1))
        arrays["w_len"] = rng.uniform(-0.01, 0.01, (k, 1))
        arrays["beta"] = np.full(1, 0.5)
        arrays["gamma"] = np.full(1, 0.5)
        if config.windowed:
            window = window or WindowConfig()
            arrays["rank_weights"] = 1.0 / np.arange(1, window.top_r + 1)
        return cls.from_arrays(arrays, config, config.windowed)


# -- intermediate results -------------------------------------------------------------


@dataclass
class SequenceRepresentation:
    raw: T.Tensor  # embeddings
    positioned: T.Tensor  # embeddings + positional encoding
    contextual: T.Tensor  # Transformer output
    hybrid: T.Tensor  # alpha blend, padding rows zero
    mask: np.ndarray
    lengths: np.ndarray


@dataclass
class MatchMatrix:
    M: T.Tensor  # (B, m, n) cosine similarities, masked cells 0
    query_mask: np.ndarray
    doc_mask: np.ndarray

    @property
    def cell_mask(self):
        return self.query_mask[:, :, None] * self.doc_mask[:, None, :]


@dataclass
class KernelFeatures:
    pooled: T.Tensor  # (B, K, m, W) kernel sums per query term and window
    match: MatchMatrix
    mus: np.ndarray
    sigma: float
    starts: np.ndarray
    ends: np.ndarray

    @property
    def per_term(self):
        """``K^k_i`` as a ``(B, K, m)`` tensor (single-window features only)."""
        B, K, m, W = self.pooled.shape
        if W != 1:
            raise ScoringError("per_term requires single-window features")
        return T.reshape(self.pooled, (B, K, m))

    def matrices(self):
        """Per-kernel activation matrices ``K^k_{i,j}`` as ``(B, K, m, n)`` numpy."""
        M = np.ascontiguousarray(self.match.M.data)
        return kernels.rbf_transform(M, np.ascontiguousarray(self.match.cell_mask), self.mus, self.sigma)


@dataclass
class ScoreTensors:
    s_klog: T.Tensor  # (B, K)
    s_klen: T.Tensor  # (B, K)
    s_log: T.Tensor  # (B,)
    s_len: T.Tensor  # (B,)
    s: T.Tensor  # (B,)
    d_len: np.ndarray
    window_scores: np.ndarray | None = None  # (B, R) sorted, windowed variant only
    window_present: np.ndarray | None = None


@dataclass
class ScoreBreakdown:
    kernel_mus: tuple
    s_klog: np.ndarray
    s_klen: np.ndarray
    s_log: float
    s_len: float
    beta: float
    gamma: float
    s: float
    d_len: int
    window_scores: list = field(default_factory=list)

    def recompute(self):
        return self.s_log * self.beta + self.s_len * self.gamma


# -- network stages -------------------------------------------------------------------


def positional_encoding(length, d_emb):
    """Sinusoidal encoding: sin on even dims, cos on odd dims, rate 10000^(2i/d)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    pos = np.arange(length, dtype=np.float64)[:, None]
    j = np.arange(d_emb)
    angles = pos / np.power(10000.0, (2 * (j // 2)) / d_emb)
    return np.where(j % 2 == 0, np.sin(angles), np.cos(angles))


def feed_forward(x, layer):
    return T.relu(x @ layer.ff_w1 + layer.ff_b1) @ layer.ff_w2 + layer.ff_b2


def multi_head(x, key_mask, layer, heads, head_dim):
    B, L, _ = x.shape

    def split(t):
        return T.transpose(T.reshape(t, (B, L, heads, head_dim)), (0, 2, 1, 3))

    q, k, v = split(x @ layer.wq), split(x @ layer.wk), split(x @ layer.wv)
    logits = T.scale(q @ T.transpose(k), 1.0 / math.sqrt(head_dim))
    logits = T.masked_fill(logits, (key_mask == 0)[:, None, None, :], -np.inf)
    attended = T.softmax_rows(logits) @ v
    concat = T.reshape(T.transpose(attended, (0, 2, 1, 3)), (B, L, heads * head_dim))
    return concat @ layer.wo


def transformer_layer(p, mask, layer, heads, head_dim):
    """``MultiHead(FF(p)) + FF(p)`` with FF evaluated once and padded keys masked."""
    f = feed_forward(p, layer)
    return multi_head(f, mask, layer, heads, head_dim) + f


def contextualize(ids, mask, params, config, alpha_override=None):
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.float64)
    lengths = mask.sum(axis=1).astype(np.int64)
    if ids.size == 0 or np.any(lengths < 1):
        raise ScoringError("cannot contextualize an empty sequence")
    raw = T.gather_rows(params.embedding, ids, padding_id=PAD_ID)
    positioned = raw + positional_encoding(ids.shape[1], config.d_emb)[None]
    x = positioned
    for layer in params.layers:
        x = transformer_layer(x, mask, layer, config.heads, config.head_dim)
    if alpha_override is None:
        alpha = T.sigmoid(params.alpha_raw)
    else:
        alpha = T.Tensor(np.full(1, float(alpha_override)))
    hybrid = raw * alpha + x * (1.0 - alpha)
    hybrid = hybrid * mask[:, :, None]
    return SequenceRepresentation(raw, positioned, x, hybrid, mask, lengths)


def match_matrix(q_rep, d_rep):
    mm = MatchMatrix(None, q_rep.mask, d_rep.mask)
    mm.M = T.cosine_rows(q_rep.hybrid, d_rep.hybrid) * mm.cell_mask
    return mm


def kernel_features(mm, config, starts=None, ends=None):
    """Gaussian kernel sums over the document dimension.

    Without explicit windows each document is pooled as one window covering
    its true length.
    """
    if starts is None:
        lengths = mm.doc_mask.sum(axis=1).astype(np.int64)
        starts = np.zeros((len(lengths), 1), dtype=np.int64)
        ends = lengths[:, None].copy()
    mus = np.asarray(config.kernel_mus, dtype=np.float64)
    pooled = T.rbf_window_pool(mm.M, mm.cell_mask, mus, config.kernel_sigma, starts, ends)
    return KernelFeatures(pooled, mm, mus, config.kernel_sigma, starts, ends)


def _combine(s_klog, s_klen, params):
    B = s_klog.shape[0]
    s_log = T.reshape(s_klog @ params.w_log, (B,))
    s_len = T.reshape(s_klen @ params.w_len, (B,))
    s = s_log * params.beta + s_len * params.gamma
    return s_log, s_len, s


def _pool_paths(pooled, q_mask, lengths, config):
    """Log and length paths summed over query terms; ``pooled`` is ``(B, K, m, W)``."""
    qm = q_mask[:, None, :, None]
    logk = T.log_base(T.clamp_min(pooled, config.log_eps), config.log_base) * qm
    s_klog = T.sum(logk, axis=2)
    s_klen = T.sum(pooled * (qm / lengths[:, None, None, :]), axis=2)
    return s_klog, s_klen  # (B, K, W)


def score(features, d_len, q_mask, params, config):
    """Log-normalized and length-normalized pooling combined with beta and gamma."""
    d_len = np.asarray(d_len, dtype=np.float64).reshape(-1)
    if np.any(d_len < 1):
        raise ScoringError("document length must be >= 1")
    if features.pooled.shape[3] != 1:
        raise ScoringError("score expects single-window features; use windowed_score")
    s_klog, s_klen = _pool_paths(features.pooled, q_mask, d_len[:, None], config)
    B, K = s_klog.shape[:2]
    s_klog, s_klen = T.reshape(s_klog, (B, K)), T.reshape(s_klen, (B, K))
    s_log, s_len, s = _combine(s_klog, s_klen, params)
    return ScoreTensors(s_klog, s_klen, s_log, s_len, s, d_len)


def windowed_score(features, q_mask, params, config, top_r):
    """Score every window, sort descending and sum the top ``top_r`` with rank weights.

    A window score uses both pooling paths with the window length in place of
    the document length. The returned per-kernel vectors are the rank-weighted
    sums of the selected windows' vectors, so ``s`` keeps the
    ``s_log * beta + s_len * gamma`` form.
    """
    starts, ends = features.starts, features.ends
    valid = ends > starts
    wlen = np.where(valid, ends - starts, 1).astype(np.float64)
    s_klog_w, s_klen_w = _pool_paths(features.pooled, q_mask, wlen, config)  # (B, K, W)
    beta, gamma = float(params.beta.data[0]), float(params.gamma.data[0])
    w_scores = (beta * np.einsum("bkw,k->bw", s_klog_w.data, params.w_log.data[:, 0])
                + gamma * np.einsum("bkw,k->bw", s_klen_w.data, params.w_len.data[:, 0]))
    index, present = rank_order(w_scores, valid, top_r)
    B, K, W = s_klog_w.shape
    gather_idx = np.broadcast_to(index[:, :, None], (B, top_r, K))
    if top_r != params.rank_weights.shape[0]:
        raise ScoringError("top_r does not match the number of rank weights")
    weights = T.reshape(params.rank_weights, (1, top_r, 1)) * T.Tensor(present[:, :, None].astype(np.float64))
    agg_log = T.sum(T.take(T.transpose(s_klog_w, (0, 2, 1)), gather_idx, 1) * weights, axis=1)
    agg_len = T.sum(T.take(T.transpose(s_klen_w, (0, 2, 1)), gather_idx, 1) * weights, axis=1)
    s_log, s_len, s = _combine(agg_log, agg_len, params)
    sorted_scores = np.where(present, np.take_along_axis(w_scores, index, 1), 0.0)
    d_len = features.match.doc_mask.sum(axis=1)
    return ScoreTensors(agg_log, agg_len, s_log, s_len, s, d_len, sorted_scores, present)


# -- model wrapper ----------------------------------------------------------------------


@dataclass
class ForwardResult:
    query: SequenceRepresentation
    doc: SequenceRepresentation
    match: MatchMatrix
    features: KernelFeatures
    scores: ScoreTensors


class TKModel:
    """Bundles configuration, vocabulary and parameters."""

    def __init__(self, config, params, vocab=None, window=None):
        self.config = config
        self.params = params
        self.vocab = vocab
        self.window = window or WindowConfig()
        if config.windowed:
            if params.rank_weights is None:
                raise ValueError("windowed model requires rank weights")
            if max(self.window.sizes) > config.doc_cap:
                raise ConfigError(f"window size {max(self.window.sizes)} exceeds doc_cap {config.doc_cap}")

    @classmethod
    def create(cls, config, vocab, seed=0, embeddings=None, window=None):
        window = window or WindowConfig()
        params = TKParameters.init(config, len(vocab), seed, embeddings, window)
        return cls(config, params, vocab, window)

    def parameters(self):
        return self.params.named()

    def encode_query(self, text, strict=True):
        return encode_sequence(text, self.vocab, self.config.query_cap, strict)

    def encode_doc(self, text, strict=True):
        return encode_sequence(text, self.vocab, self.config.doc_cap, strict)

    def run_batch(self, q_ids, q_mask, d_ids, d_mask, alpha_override=None):
        q_rep = contextualize(q_ids, q_mask, self.params, self.config, alpha_override)
        d_rep = contextualize(d_ids, d_mask, self.params, self.config, alpha_override)
        mm = match_matrix(q_rep, d_rep)
        if self.config.windowed:
            starts, ends, _ = window_arrays(d_rep.lengths, self.window)
            feats = kernel_features(mm, self.config, starts, ends)
            scores = windowed_score(feats, q_rep.mask, self.params, self.config, self.window.top_r)
        else:
            feats = kernel_features(mm, self.config)
            scores = score(feats, d_rep.lengths, q_rep.mask, self.params, self.config)
        return ForwardResult(q_rep, d_rep, mm, feats, scores)

    def score_batch(self, queries, docs, alpha_override=None):
        """Scores tensor ``(B,)`` for aligned lists of query and document sequences."""
        q_ids, q_mask, _ = collate(queries)
        d_ids, d_mask, _ = collate(docs)
        return self.run_batch(q_ids, q_mask, d_ids, d_mask, alpha_override).scores

    def run_pair(self, query, doc, alpha_override=None):
        q_ids, q_mask, _ = collate([query])
        d_ids, d_mask, _ = collate([doc])
        with no_grad():
            return self.run_batch(q_ids, q_mask, d_ids, d_mask, alpha_override)

    def forward(self, query, doc, alpha_override=None):
        """Score one query-document pair and return the full breakdown."""
        return breakdowns(self.run_pair(query, doc, alpha_override).scores, self.params, self.config)[0]

    def score_pairs(self, pairs):
        """Final scores for ``(query, doc)`` pairs, evaluated one pair at a time."""
        return [self.forward(q, d).s for q, d in pairs]


def breakdowns(scores, params, config):
    beta, gamma = float(params.beta.data[0]), float(params.gamma.data[0])
    out = []
    for b in range(scores.s.shape[0]):
        ws = []
        if scores.window_scores is not None:
            ws = [float(v) for v, p in zip(scores.window_scores[b], scores.window_present[b]) if p]
        out.append(ScoreBreakdown(
            kernel_mus=tuple(config.kernel_mus),
            s_klog=scores.s_klog.data[b].copy(),
            s_klen=scores.s_klen.data[b].copy(),
            s_log=float(scores.s_log.data[b]),
            s_len=float(scores.s_len.data[b]),
            beta=beta,
            gamma=gamma,
            s=float(scores.s.data[b]),
            d_len=int(scores.d_len[b]),
            window_scores=ws,
        ))
    return out


def ensemble_scores(breakdowns_):
    """Arithmetic mean of the final scores of independently trained models."""
    if not breakdowns_:
        raise ValueError("ensemble_scores needs at least one breakdown")
    return float(np.mean([b.s for b in breakdowns_]))
