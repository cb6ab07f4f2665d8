"""Re-ranking first-stage candidate lists, depth tuning and run ensembling."""

from __future__ import annotations

import logging

from .metrics import RunList, mrr_at_k

log = logging.getLogger(__name__)


def merge_at_depth(ranked, model_scores, depth):
    """Re-order the top ``depth`` of ``ranked`` by model score and keep the rest.

    ``ranked`` is the first-stage ``[(docid, score), ...]``; ``model_scores``
    maps docid to model score for at least the top ``depth`` documents. Ties
    keep first-stage order. Documents below the cutoff keep their relative
    order and receive scores strictly below the re-ranked head so the run
    stays sorted.
    """
    head = ranked[:depth]
    tail = ranked[depth:]
    order = sorted(range(len(head)), key=lambda i: (-model_scores[head[i][0]], i))
    out = [(head[i][0], float(model_scores[head[i][0]])) for i in order]
    floor = out[-1][1] if out else 0.0
    out.extend((docid, floor - (j + 1)) for j, (docid, _) in enumerate(tail))
    return out


def rerank_run(first_stage, model_scores, depth=None, tag="tk"):
    """Apply :func:`merge_at_depth` to every query; ``depth=None`` re-ranks everything."""
    rankings = {}
    for qid, ranked in first_stage.rankings.items():
        d = len(ranked) if depth is None else depth
        rankings[qid] = merge_at_depth(ranked, model_scores[qid], d)
    return RunList(rankings, tag)


def depth_curve(first_stage, model_scores, qrels, depths, k=10):
    """MRR@k of the merged run for every candidate depth."""
    if not depths:
        raise ValueError("no depths to evaluate")
    deepest = max(depths)
    short = [q for q, r in first_stage.rankings.items() if len(r) < deepest]
    if short:
        log.warning("%d queries have fewer than %d candidates", len(short), deepest)
    return {d: mrr_at_k(rerank_run(first_stage, model_scores, d), qrels, k) for d in depths}


def tune_rerank_depth(first_stage, model_scores, qrels, depths, k=10):
    """Depth with the highest validation MRR@k; ties go to the smallest depth."""
    return best_depth(depth_curve(first_stage, model_scores, qrels, depths, k))


def best_depth(curve):
    return min(curve, key=lambda d: (-curve[d], d))


def ensemble_runs(runs, tag="ensemble"):
    """Average scores of the same (query, document) pairs across runs and re-sort."""
    if not runs:
        raise ValueError("ensemble needs at least one run")
    keys = [{(q, d) for q, r in run.rankings.items() for d, _ in r} for run in runs]
    if any(k != keys[0] for k in keys[1:]):
        raise ValueError("runs to ensemble must contain the same query-document pairs")
    scores = {}
    first = runs[0]
    for qid, ranked in first.rankings.items():
        per_doc = {}
        for docid, _ in ranked:
            per_doc[docid] = 0.0
        for run in runs:
            for docid, s in run.rankings[qid]:
                per_doc[docid] += s
        scores[qid] = {d: v / len(runs) for d, v in per_doc.items()}
    return RunList.from_scores(scores, tag)
