"""Ranking metrics and the TREC run / qrels text formats."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class FormatError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass
class Qrels:
    """Graded judgments; unjudged pairs have grade 0."""

    grades: dict = field(default_factory=dict)  # qid -> {docid: grade}
    threshold: int = 1  # grade >= threshold is relevant for binary metrics

    def grade(self, qid, docid):
        return self.grades.get(qid, {}).get(docid, 0)

    def is_relevant(self, qid, docid):
        return self.grade(qid, docid) >= self.threshold

    def n_relevant(self, qid):
        return sum(1 for g in self.grades.get(qid, {}).values() if g >= self.threshold)


@dataclass
class RunList:
    """Ranked results per query: ``qid -> [(docid, score), ...]`` best first."""

    rankings: dict = field(default_factory=dict)
    tag: str = "tk"

    @classmethod
    def from_scores(cls, scores, tag="tk"):
        """Build from ``qid -> {docid: score}``; ties broken by original insertion order."""
        rankings = {}
        for qid, docs in scores.items():
            items = list(docs.items())
            order = sorted(range(len(items)), key=lambda i: (-items[i][1], i))
            rankings[qid] = [items[i] for i in order]
        return cls(rankings, tag)

    def validate(self):
        for qid, ranked in self.rankings.items():
            seen = set()
            for docid, _ in ranked:
                if docid in seen:
                    raise FormatError(f"duplicate document {docid!r} for query {qid!r}")
                seen.add(docid)
            if any(ranked[i][1] < ranked[i + 1][1] for i in range(len(ranked) - 1)):
                raise FormatError(f"scores not non-increasing for query {qid!r}")


# -- file formats ----------------------------------------------------------------------


def parse_run(text):
    rankings, seen, tag = {}, set(), None
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise FormatError(f"run line {lineno}: expected 6 fields, got {len(parts)}")
        qid, _, docid, rank, score, tag = parts
        try:
            rank, score = int(rank), float(score)
        except ValueError:
            raise FormatError(f"run line {lineno}: bad rank or score") from None
        if (qid, docid) in seen:
            raise FormatError(f"run line {lineno}: duplicate document {docid!r} for query {qid!r}")
        seen.add((qid, docid))
        entries.setdefault(qid, []).append((rank, docid, score))
    for qid, items in entries.items():
        items.sort(key=lambda x: x[0])
        rankings[qid] = [(docid, score) for _, docid, score in items]
    return RunList(rankings, tag or "tk")


def format_run(run):
    lines = []
    for qid, ranked in run.rankings.items():
        for rank, (docid, score) in enumerate(ranked, start=1):
            lines.append(f"{qid} Q0 {docid} {rank} {float(score)!r} {run.tag}")
    return "".join(line + "\n" for line in lines)


def read_run(path):
    with open(path, encoding="utf-8") as fh:
        return parse_run(fh.read())


def write_run(path, run):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_run(run))


def parse_qrels(text, threshold=1):
    grades = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"qrels line {lineno}: expected 4 fields, got {len(parts)}")
        qid, _, docid, grade = parts
        try:
            grade = int(grade)
        except ValueError:
            raise FormatError(f"qrels line {lineno}: grade {grade!r} is not an integer") from None
        if grade < 0:
            raise FormatError(f"qrels line {lineno}: negative grade {grade}")
        grades.setdefault(qid, {})[docid] = grade
    return Qrels(grades, threshold)


def format_qrels(qrels):
    return "".join(
        f"{qid} 0 {docid} {grade}\n" for qid, docs in qrels.grades.items() for docid, grade in docs.items()
    )


def read_qrels(path, threshold=1):
    with open(path, encoding="utf-8") as fh:
        return parse_qrels(fh.read(), threshold)


# -- metrics ---------------------------------------------------------------------------


def _queries(run, qrels, graded=False):
    if not run.rankings:
        raise EvaluationError("empty run")
    if graded:
        return [q for q in run.rankings if any(g > 0 for g in qrels.grades.get(q, {}).values())]
    return [q for q in run.rankings if qrels.n_relevant(q) > 0]


def _mean(values):
    return sum(values) / len(values) if values else 0.0


def reciprocal_rank(ranked, qid, qrels, k):
    for rank, (docid, _) in enumerate(ranked[:k], start=1):
        if qrels.is_relevant(qid, docid):
            return 1.0 / rank
    return 0.0


def mrr_at_k(run, qrels, k=10):
    if k < 1:
        raise ValueError("k must be >= 1")
    return _mean([reciprocal_rank(run.rankings[q], q, qrels, k) for q in _queries(run, qrels)])


def average_precision(ranked, qid, qrels):
    hits, total = 0, 0.0
    for rank, (docid, _) in enumerate(ranked, start=1):
        if qrels.is_relevant(qid, docid):
            hits += 1
            total += hits / rank
    return total / qrels.n_relevant(qid)


def map_score(run, qrels):
    return _mean([average_precision(run.rankings[q], q, qrels) for q in _queries(run, qrels)])


def ndcg(ranked, qid, qrels, k=None):
    judged = qrels.grades.get(qid, {})
    cut = ranked if k is None else ranked[:k]
    dcg = sum((2 ** qrels.grade(qid, d) - 1) / math.log2(r + 1) for r, (d, _) in enumerate(cut, start=1))
    ideal_grades = sorted(judged.values(), reverse=True)
    if k is not None:
        ideal_grades = ideal_grades[:k]
    idcg = sum((2 ** g - 1) / math.log2(r + 1) for r, g in enumerate(ideal_grades, start=1))
    return dcg / idcg


def ndcg_at_k(run, qrels, k=10):
    """nDCG with gain ``2^grade - 1``; ``k=None`` evaluates the full ranking."""
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    return _mean([ndcg(run.rankings[q], q, qrels, k) for q in _queries(run, qrels, graded=True)])


def precision_at_k(run, qrels, k=10):
    if k < 1:
        raise ValueError("k must be >= 1")
    values = []
    for q in _queries(run, qrels):
        hits = sum(1 for d, _ in run.rankings[q][:k] if qrels.is_relevant(q, d))
        values.append(hits / k)
    return _mean(values)


def evaluate(run, qrels, k=10):
    """The standard report: MAP, nDCG@k, MRR@k and P@k."""
    return {
        "map": map_score(run, qrels),
        f"ndcg@{k}": ndcg_at_k(run, qrels, k),
        f"mrr@{k}": mrr_at_k(run, qrels, k),
        f"p@{k}": precision_at_k(run, qrels, k),
    }


def format_report(report):
    return "".join(f"{name}\t{value:.6f}\n" for name, value in report.items())
