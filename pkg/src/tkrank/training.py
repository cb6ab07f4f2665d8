"""Pairwise hinge-loss training with early stopping on validation MRR@10."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .metrics import Qrels, RunList, mrr_at_k
from .optim import Adam
from .tensor import no_grad
from .text import collate

log = logging.getLogger(__name__)


class TrainingError(ValueError):
    pass


@dataclass
class TrainingTriple:
    query: object  # TokenSequence
    positive: object
    negative: object

    def __post_init__(self):
        for name in ("query", "positive", "negative"):
            seq = getattr(self, name)
            if seq is None or seq.true_length < 1:
                raise TrainingError(f"training triple has an empty {name}")


@dataclass
class ValidationSet:
    """Candidates to rank per query plus the judgments used to score the ranking."""

    queries: dict  # qid -> TokenSequence
    candidates: dict  # qid -> [(docid, TokenSequence), ...]
    qrels: Qrels

    def __post_init__(self):
        for qid in list(self.queries):
            if not self.candidates.get(qid):
                log.warning("validation query %s has no candidates; skipped", qid)
                self.queries.pop(qid)
                self.candidates.pop(qid, None)


@dataclass
class EarlyStopState:
    best: float = float("-inf")
    best_step: int = -1
    best_state: dict | None = None
    since_improvement: int = 0

    def update(self, step, value, params):
        """Record a validation result; returns True when it is a new best."""
        if value > self.best:
            self.best, self.best_step = value, step
            self.best_state = params.state()
            self.since_improvement = 0
            return True
        self.since_improvement += 1
        return False


@dataclass
class TrainResult:
    best_mrr: float
    best_step: int
    steps: int
    losses: list = field(default_factory=list)  # (step, loss)
    validations: list = field(default_factory=list)  # (step, mrr@10)
    log_lines: list = field(default_factory=list)

    def log_text(self):
        return "".join(line + "\n" for line in self.log_lines)


def hinge_loss(s_pos, s_neg, margin=1.0):
    """``max(0, margin - (s_pos - s_neg))`` for plain floats."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    return max(0.0, margin - (s_pos - s_neg))


def batch_hinge_loss(s_pos, s_neg, margin):
    """Mean hinge loss over a batch of score tensors; subgradient 0 at the kink."""
    diff = T.scale(T.add(s_pos, T.scale(s_neg, -1.0)), -1.0)
    per_pair = T.relu(T.add(diff, np.float64(margin)))
    return T.scale(T.sum(per_pair), 1.0 / s_pos.shape[0])


def _triple_batch_scores(model, batch):
    queries = [t.query for t in batch]
    docs = [t.positive for t in batch] + [t.negative for t in batch]
    q_ids, q_mask, _ = collate(queries + queries)
    d_ids, d_mask, _ = collate(docs)
    s = model.run_batch(q_ids, q_mask, d_ids, d_mask).scores.s
    n = len(batch)
    pos = T.take(s, np.arange(n), 0)
    neg = T.take(s, np.arange(n, 2 * n), 0)
    return pos, neg


def score_batched(model, queries, docs, batch_size=256):
    """Final scores for aligned query/doc lists, evaluated in fixed-size chunks."""
    out = []
    with no_grad():
        for start in range(0, len(queries), batch_size):
            s = model.score_batch(queries[start:start + batch_size], docs[start:start + batch_size]).s
            out.extend(float(v) for v in s.data)
    return out


def pairwise_accuracy(model, triples, batch_size=256):
    """Fraction of triples whose positive document outscores the negative."""
    q = [t.query for t in triples]
    pos = score_batched(model, q, [t.positive for t in triples], batch_size)
    neg = score_batched(model, q, [t.negative for t in triples], batch_size)
    return float(np.mean([p > n for p, n in zip(pos, neg)]))


def rank_validation(model, validation, batch_size=256):
    q, d, keys = [], [], []
    for qid, cands in validation.candidates.items():
        for docid, seq in cands:
            q.append(validation.queries[qid])
            d.append(seq)
            keys.append((qid, docid))
    scores = score_batched(model, q, d, batch_size)
    by_query = {}
    for (qid, docid), s in zip(keys, scores):
        by_query.setdefault(qid, {})[docid] = s
    return RunList.from_scores(by_query)


def validation_mrr(model, validation, k=10):
    return mrr_at_k(rank_validation(model, validation), validation.qrels, k)


def train(triples, validation, model, tconfig, validate_fn=None, on_validation=None, trainable=None):
    """Train ``model`` in place and leave it holding the best validation checkpoint.

    ``validate_fn(model) -> float`` overrides the default MRR@10 over
    ``validation``. ``on_validation(step, value)`` is called after every check.
    ``trainable`` restricts which parameters the optimizer updates.
    """
    triples = list(triples)
    if not triples:
        raise TrainingError("no training triples")
    if len(triples) < tconfig.batch_size:
        raise TrainingError(f"{len(triples)} triples is fewer than one batch of {tconfig.batch_size}")
    if validate_fn is None:
        if validation is None or not validation.queries:
            raise TrainingError("empty validation set")
        validate_fn = lambda m: validation_mrr(m, validation)  # noqa: E731

    params = model.params
    opt = Adam(list(trainable) if trainable is not None else params.named(), tconfig.lr_a, tconfig.lr_b)
    rng = np.random.default_rng(tconfig.seed)
    stopper = EarlyStopState()
    result = TrainResult(best_mrr=float("-inf"), best_step=-1, steps=0)
    bs = tconfig.batch_size
    step = 0

    def check():
        value = float(validate_fn(model))
        result.validations.append((step, value))
        result.log_lines.append(f"{step}\tmrr@10={value!r}")
        improved = stopper.update(step, value, params)
        log.info("step %d validation mrr@10 %.4f%s", step, value, " (best)" if improved else "")
        if on_validation is not None:
            on_validation(step, value)

    stop = tconfig.max_steps == 0
    while not stop:
        perm = rng.permutation(len(triples))
        for start in range(0, len(triples) - bs + 1, bs):
            batch = [triples[i] for i in perm[start:start + bs]]
            pos, neg = _triple_batch_scores(model, batch)
            loss = batch_hinge_loss(pos, neg, tconfig.margin)
            opt.zero_grad()
            loss.backward()
            opt.step()
            step += 1
            value = loss.item()
            result.losses.append((step, value))
            result.log_lines.append(f"{step}\t{value!r}")
            if step % tconfig.validate_every == 0 or step == tconfig.max_steps:
                check()
                if stopper.since_improvement >= tconfig.patience:
                    stop = True
            if stop or step >= tconfig.max_steps:
                stop = True
                break

    if stopper.best_state is None:
        check()
    params.load_state(stopper.best_state)
    result.best_mrr, result.best_step, result.steps = stopper.best, stopper.best_step, step
    return result
