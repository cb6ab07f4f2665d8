"""Command-line entry point: index, search, train, rerank, evaluate, tune-depth, explain, ensemble."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bm25
from .checkpoint import load_checkpoint, save_checkpoint
from .config import DEPTH_PRESETS, TUNED_DOCUMENT_DEPTHS, ConfigError, RunConfig, apply_overrides, load_config
from .explain import explain, render_html, render_text
from .metrics import RunList, evaluate, format_report, read_qrels, read_run, write_run
from .model import TKModel
from .rerank import best_depth, depth_curve, ensemble_runs, rerank_run
from .text import build_vocabulary, load_embeddings, read_collection, read_queries, read_triples
from .training import TrainingTriple, ValidationSet, train

log = logging.getLogger("tkrank")

DEPTH_LIST_PRESETS = {"tuned-document": TUNED_DOCUMENT_DEPTHS}


class CLIError(Exception):
    pass


def _run_config(args):
    config = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    pairs = []
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CLIError(f"--set expects key=value, got {item!r}")
        pairs.append(tuple(item.split("=", 1)))
    if getattr(args, "seed", None) is not None:
        pairs.append(("train.seed", str(args.seed)))
    return apply_overrides(config, pairs) if pairs else config


def _load_model(args):
    expected_model = expected_window = None
    if args.config:
        cfg = _run_config(args)
        expected_model, expected_window = cfg.model, cfg.window
    return load_checkpoint(args.checkpoint, expected_model, expected_window)


def _depth(args):
    if getattr(args, "depth_preset", None):
        return DEPTH_PRESETS[args.depth_preset]
    return args.depth


def _model_scores(model, first_stage, queries, collection, depth=None):
    """Model scores for the top ``depth`` candidates of every query (pairwise, deterministic)."""
    doc_cache = {}
    out = {}
    for qid, ranked in first_stage.rankings.items():
        if qid not in queries:
            raise CLIError(f"query {qid!r} from the run is missing in the queries file")
        q = model.encode_query(queries[qid], strict=False)
        scores = {}
        for docid, _ in ranked[: len(ranked) if depth is None else depth]:
            if docid not in collection:
                raise CLIError(f"document {docid!r} from the run is missing in the collection")
            if docid not in doc_cache:
                doc_cache[docid] = model.encode_doc(collection[docid], strict=False)
            d = doc_cache[docid]
            scores[docid] = float("-inf") if q is None or d is None else model.forward(q, d).s
        out[qid] = scores
    return out


# -- subcommands ------------------------------------------------------------------------


def cmd_index(args):
    index = bm25.InvertedIndex.build(read_collection(args.collection))
    index.save(args.output)
    log.info("indexed %d documents, %d terms", index.n_docs, len(index.postings))


def _bm25_run(index, queries, k, k1, b, tag):
    rankings = {qid: bm25.search(text, index, k, k1, b) for qid, text in queries.items()}
    return RunList(rankings, tag)


def cmd_search(args):
    index = bm25.InvertedIndex.load(args.index)
    run = _bm25_run(index, read_queries(args.queries), args.k, args.k1, args.b, args.tag)
    write_run(args.output, run)


def cmd_train(args):
    cfg = _run_config(args)
    collection = read_collection(args.collection)
    vocab = build_vocabulary(collection.values(), cfg.model.min_occurrence)
    seed = cfg.train.seed
    embeddings = None
    if args.embeddings:
        embeddings = load_embeddings(args.embeddings, vocab, cfg.model.d_emb, seed).matrix
    model = TKModel.create(cfg.model, vocab, seed=seed, embeddings=embeddings, window=cfg.window)

    triples = [
        TrainingTriple(model.encode_query(q), model.encode_doc(p), model.encode_doc(n))
        for q, p, n in read_triples(args.triples)
    ]
    queries = read_queries(args.val_queries)
    val_run = read_run(args.val_run)
    candidates, val_queries = {}, {}
    for qid, ranked in val_run.rankings.items():
        q = model.encode_query(queries[qid], strict=False) if qid in queries else None
        if q is None:
            continue
        val_queries[qid] = q
        cands = []
        for docid, _ in ranked[: args.val_depth]:
            d = model.encode_doc(collection[docid], strict=False)
            if d is not None:
                cands.append((docid, d))
        candidates[qid] = cands
    validation = ValidationSet(val_queries, candidates, read_qrels(args.qrels))

    result = train(triples, validation, model, cfg.train)
    save_checkpoint(args.output, model)
    if args.log:
        Path(args.log).write_text(result.log_text(), encoding="utf-8")
    log.info("best validation mrr@10 %.4f at step %d of %d", result.best_mrr, result.best_step, result.steps)


def cmd_rerank(args):
    model = _load_model(args)
    collection = read_collection(args.collection)
    queries = read_queries(args.queries)
    depth = _depth(args)
    if args.mode == "full":
        if not args.index:
            raise CLIError("--mode full requires --index")
        index = bm25.InvertedIndex.load(args.index)
        k = max(args.k, depth or 0)
        first_stage = _bm25_run(index, queries, k, args.k1, args.b, "bm25")
    else:
        if not args.run:
            raise CLIError("--mode rerank requires --run")
        first_stage = read_run(args.run)
        depth = None
    scores = _model_scores(model, first_stage, queries, collection, depth)
    write_run(args.output, rerank_run(first_stage, scores, depth, args.tag))


def cmd_evaluate(args):
    report = evaluate(read_run(args.run), read_qrels(args.qrels, args.threshold), args.k)
    text = format_report(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _parse_depths(raw):
    if raw in DEPTH_LIST_PRESETS:
        return list(DEPTH_LIST_PRESETS[raw])
    try:
        depths = [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise CLIError(f"bad depth list {raw!r}") from None
    if not depths or any(d < 1 for d in depths):
        raise CLIError("depths must be positive integers")
    return depths


def cmd_tune_depth(args):
    model = _load_model(args)
    depths = _parse_depths(args.depths)
    first_stage = read_run(args.run)
    scores = _model_scores(model, first_stage, read_queries(args.queries), read_collection(args.collection),
                           max(depths))
    qrels = read_qrels(args.qrels, args.threshold)
    curve = depth_curve(first_stage, scores, qrels, depths)
    for d, v in curve.items():
        sys.stdout.write(f"depth\t{d}\tmrr@10\t{v:.6f}\n")
    sys.stdout.write(f"best_depth\t{best_depth(curve)}\n")


def cmd_explain(args):
    model = _load_model(args)
    collection = read_collection(args.collection)
    queries = read_queries(args.queries)
    run = read_run(args.run)
    qid = args.query_id
    if qid not in queries:
        raise CLIError(f"unknown query id {qid!r}")
    if qid not in run.rankings:
        raise CLIError(f"query {qid!r} is not in the run")
    highlight = tuple(float(x) for x in args.highlight.split(","))
    qrels = read_qrels(args.qrels) if args.qrels else None
    first_stage = run.rankings[qid]
    single = RunList({qid: first_stage}, run.tag)
    scores = _model_scores(model, single, queries, collection)
    reranked = rerank_run(single, scores, None).rankings[qid]
    fs_rank = {d: r for r, (d, _) in enumerate(first_stage, start=1)}
    tk_rank = {d: r for r, (d, _) in enumerate(reranked, start=1)}

    q = model.encode_query(queries[qid])
    reports = []
    for docid in args.doc_ids:
        if docid not in collection:
            raise CLIError(f"unknown document id {docid!r}")
        rep = explain(model, q, model.encode_doc(collection[docid]), highlight)
        rep.meta.update(doc_id=docid)
        if docid in tk_rank:
            rep.meta.update(model_rank=tk_rank[docid], first_stage_rank=fs_rank[docid])
        if qrels is not None:
            rep.meta["relevant"] = qrels.is_relevant(qid, docid)
        reports.append(rep)
    render = render_html if args.html else render_text
    out = render(reports[0], reports[1], queries[qid], qid, args.precision)
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)


def cmd_ensemble(args):
    runs = [read_run(p) for p in args.runs]
    write_run(args.output, ensemble_runs(runs, args.tag))


# -- parser -------------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="tkrank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p, checkpoint=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int)
        if checkpoint:
            p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("index", help="build a BM25 index from a collection TSV")
    p.add_argument("--collection", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="BM25 retrieval to a TREC run file")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--tag", default="bm25")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train", help="train a TK model with early stopping")
    model_args(p, checkpoint=False)
    p.add_argument("--collection", required=True, help="collection TSV (also builds the vocabulary)")
    p.add_argument("--triples", required=True)
    p.add_argument("--embeddings", help="whitespace-separated vector file")
    p.add_argument("--val-queries", required=True)
    p.add_argument("--val-run", required=True, help="validation candidates as a TREC run")
    p.add_argument("--val-depth", type=int, default=1000)
    p.add_argument("--qrels", required=True)
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rerank", help="re-rank candidates with a trained model")
    model_args(p)
    p.add_argument("--collection", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--mode", choices=("full", "rerank"), default="rerank")
    p.add_argument("--index", help="BM25 index (full mode)")
    p.add_argument("--run", help="input run (rerank mode)")
    depth = p.add_mutually_exclusive_group()
    depth.add_argument("--depth", type=int, default=1000)
    depth.add_argument("--depth-preset", choices=sorted(DEPTH_PRESETS))
    p.add_argument("--k", type=int, default=1000, help="first-stage list length (full mode)")
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--tag", default="tk")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("evaluate", help="MAP, nDCG@k, MRR@k, P@k of a run")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threshold", type=int, default=1, help="minimum relevant grade")
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune-depth", help="pick the re-ranking depth by validation MRR@10")
    model_args(p)
    p.add_argument("--collection", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--depths", default="tuned-document", help="comma list or 'tuned-document'")
    p.set_defaults(func=cmd_tune_depth)

    p = sub.add_parser("explain", help="side-by-side kernel report for two documents")
    model_args(p)
    p.add_argument("--collection", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--qrels")
    p.add_argument("--query-id", required=True)
    p.add_argument("--doc-ids", nargs=2, required=True)
    p.add_argument("--highlight", default="0.9,0.7")
    p.add_argument("--precision", type=int, default=2)
    p.add_argument("--html", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("ensemble", help="average the scores of several run files")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--tag", default="ensemble")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (CLIError, ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
