"""Kernel-level explanations of a TK score and the side-by-side comparison report."""

from __future__ import annotations

import html
import math
from dataclasses import dataclass, field

import numpy as np

from .model import breakdowns

TIE_TOL = 1e-12
HIGHLIGHT_COLORS = ("#ca4646", "#009714", "#1f5fbf", "#b8860b", "#7b3fa0")


def nearest_center(value, mus):
    """Closest kernel center to ``value``; equidistant centers resolve to the higher one."""
    best = None
    for mu in mus:
        dist = abs(value - mu)
        if best is None or dist < best[0] - TIE_TOL or (abs(dist - best[0]) <= TIE_TOL and mu > best[1]):
            best = (dist, mu)
    return best[1]


@dataclass
class ExplainReport:
    breakdown: object  # ScoreBreakdown
    query_tokens: list
    doc_tokens: list
    best_match: np.ndarray  # per document word: max over true query terms of M_ij
    affiliation: list  # per document word: nearest kernel center of best_match
    term_contributions: np.ndarray  # (K, m): log_b(max(K^k_i, eps)) per query term
    highlight: tuple = ()
    meta: dict = field(default_factory=dict)

    def kernel_table(self):
        """``[(mu_k, s^k_log), ...]`` taken directly from the breakdown."""
        return list(zip(self.breakdown.kernel_mus, self.breakdown.s_klog))

    def highlighted_words(self, mu):
        return [i for i, a in enumerate(self.affiliation) if a == mu]


def explain(model, query, doc, highlight=(0.9, 0.7), alpha_override=None):
    """Score one pair and attach per-word kernel affiliations."""
    result = model.run_pair(query, doc, alpha_override)
    bd = breakdowns(result.scores, model.params, model.config)[0]
    m, n = query.true_length, doc.true_length
    M = result.match.M.data[0, :m, :n]
    best = M.max(axis=0)
    mus = model.config.kernel_mus
    affiliation = [nearest_center(float(v), mus) for v in best]
    pooled = result.features.pooled.data[0, :, :m, :]
    if pooled.shape[-1] == 1:
        contrib = np.log(np.maximum(pooled[..., 0], model.config.log_eps)) / math.log(model.config.log_base)
    else:
        contrib = np.zeros((len(mus), m))
    return ExplainReport(
        breakdown=bd,
        query_tokens=list(query.tokens),
        doc_tokens=list(doc.tokens),
        best_match=best.copy(),
        affiliation=affiliation,
        term_contributions=contrib,
        highlight=tuple(float(h) for h in highlight),
    )


# -- rendering -------------------------------------------------------------------------


def _fmt(v, precision):
    return f"{v:.{precision}f}"


def table_lines(report, precision=2):
    """Rows of the kernel table: one per center, then s_log, s_len and s."""
    bd = report.breakdown
    rows = [("mu_k", "s^k_log")]
    for mu, v in report.kernel_table():
        mark = "*" if mu in report.highlight else " "
        rows.append((f"{mark}{mu:g}", _fmt(v, precision)))
    rows.append(("-" * 6, "-" * 8))
    rows.append(("s_log", _fmt(bd.s_log, precision)))
    rows.append(("s_len", _fmt(bd.s_len, precision)))
    rows.append(("-" * 6, "-" * 8))
    rows.append(("s", _fmt(bd.s, precision)))
    return [f"{a:<7}{b:>10}" for a, b in rows]


def annotate_text(report):
    """Document text with highlighted words wrapped as ``[word|mu]``."""
    out = []
    for tok, aff in zip(report.doc_tokens, report.affiliation):
        out.append(f"[{tok}|{aff:g}]" if aff in report.highlight else tok)
    return " ".join(out)


def _header(query_text, qid):
    return f"Query (Id: {qid}) {query_text}" if qid is not None else f"Query: {query_text}"


def _doc_caption(report):
    meta = report.meta
    parts = []
    if "model_rank" in meta:
        parts.append(f"Rank: TK {meta['model_rank']}")
    if "first_stage_rank" in meta:
        parts.append(f"BM25 {meta['first_stage_rank']}")
    label = ""
    if "relevant" in meta:
        label = "judged as relevant" if meta["relevant"] else "not relevant"
    if "doc_id" in meta:
        label = f"{label}, Id: {meta['doc_id']}" if label else f"Id: {meta['doc_id']}"
    caption = ", ".join(parts)
    return f"{caption} ({label})" if label else caption


def render_text(left, right, query_text, qid=None, precision=2):
    """Side-by-side plain-text comparison of two documents for one query."""
    width = 40
    lines = [_header(query_text, qid), ""]
    lines.append(f"{_doc_caption(left):<{width}} | {_doc_caption(right)}")
    lines.append("")
    lt, rt = table_lines(left, precision), table_lines(right, precision)
    for a, b in zip(lt, rt):
        lines.append(f"{a:<{width}} | {b}")
    lines.append("")
    lines.append("left:  " + annotate_text(left))
    lines.append("right: " + annotate_text(right))
    return "\n".join(lines) + "\n"


def _html_table(report, precision):
    bd = report.breakdown
    rows = []
    for mu, v in report.kernel_table():
        style = ""
        if mu in report.highlight:
            style = f' style="color:{HIGHLIGHT_COLORS[report.highlight.index(mu) % len(HIGHLIGHT_COLORS)]}"'
        rows.append(f"<tr{style}><td>{mu:g}</td><td>{_fmt(v, precision)}</td></tr>")
    rows.append(f'<tr class="sep"><td>s<sub>log</sub></td><td>{_fmt(bd.s_log, precision)}</td></tr>')
    rows.append(f"<tr><td>s<sub>len</sub></td><td>{_fmt(bd.s_len, precision)}</td></tr>")
    rows.append(f'<tr class="sep"><td><b>s</b></td><td><b>{_fmt(bd.s, precision)}</b></td></tr>')
    return ("<table><tr><th>&mu;<sub>k</sub></th><th>s<sup>k</sup><sub>log</sub></th></tr>"
            + "".join(rows) + "</table>")


def _html_words(report):
    spans = []
    for tok, aff, best in zip(report.doc_tokens, report.affiliation, report.best_match):
        tok_html = html.escape(tok)
        title = f"max cos {best:.3f}, kernel {aff:g}"
        if aff in report.highlight:
            color = HIGHLIGHT_COLORS[report.highlight.index(aff) % len(HIGHLIGHT_COLORS)]
            spans.append(f'<span class="hl" style="color:{color}" title="{title}"><u>{tok_html}</u></span>')
        else:
            spans.append(f'<span class="plain" title="{title}">{tok_html}</span>')
    return " ".join(spans)


def render_html(left, right, query_text, qid=None, precision=2):
    style = ("body{font-family:sans-serif} .grid{display:grid;grid-template-columns:35% 14% 14% 35%;gap:1em}"
             " .plain{color:#919195} tr.sep td{border-top:1px solid #888} td{padding:0 .4em}")
    return (
        f"<!DOCTYPE html><html><head><meta charset=\"utf-8\"><style>{style}</style></head><body>"
        f"<h3>{html.escape(_header(query_text, qid))}</h3>"
        f"<div class=\"grid\"><div>{html.escape(_doc_caption(left))}</div><div></div><div></div>"
        f"<div>{html.escape(_doc_caption(right))}</div>"
        f"<div>{_html_words(left)}</div><div>{_html_table(left, precision)}</div>"
        f"<div>{_html_table(right, precision)}</div><div>{_html_words(right)}</div></div>"
        "</body></html>\n"
    )
