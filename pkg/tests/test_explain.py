import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import TINY_DOC, TINY_QUERY, tiny_model
from tkrank.config import DEFAULT_MUS
from tkrank.explain import annotate_text, explain, nearest_center, render_html, render_text, table_lines


def test_nearest_center_examples():
    assert nearest_center(0.68, DEFAULT_MUS) == 0.7
    assert nearest_center(0.8, DEFAULT_MUS) == 0.9
    assert nearest_center(1.0, DEFAULT_MUS) == 1.0
    assert nearest_center(-1.0, DEFAULT_MUS) == -0.9
    assert nearest_center(0.0, DEFAULT_MUS) == 0.1


@given(st.floats(-1, 1))
def test_nearest_center_is_argmin(value):
    dists = [abs(value - mu) for mu in DEFAULT_MUS]
    got = nearest_center(value, DEFAULT_MUS)
    assert abs(value - got) <= min(dists) + 1e-12


def _reports():
    model = tiny_model()
    q = model.encode_query(TINY_QUERY)
    a = explain(model, q, model.encode_doc(TINY_DOC), highlight=(0.9, 0.3))
    b = explain(model, q, model.encode_doc("the androgen receptor binds"), highlight=(0.9, 0.3))
    return model, q, a, b


def test_report_matches_forward():
    model, q, a, _ = _reports()
    bd = model.forward(q, model.encode_doc(TINY_DOC))
    assert np.array_equal(a.breakdown.s_klog, bd.s_klog) and a.breakdown.s == bd.s
    assert len(a.affiliation) == len(a.doc_tokens) == 6
    assert a.term_contributions.shape == (model.config.n_kernels, 4)
    assert np.allclose(a.term_contributions.sum(axis=1), bd.s_klog, atol=1e-12)
    for mu in (0.9, 0.3):
        assert all(a.affiliation[i] == mu for i in a.highlighted_words(mu))


def test_text_layout():
    model, q, a, b = _reports()
    a.meta.update(doc_id="d1", model_rank=1, first_stage_rank=3, relevant=True)
    b.meta.update(doc_id="d2", model_rank=2, first_stage_rank=1, relevant=False)
    text = render_text(a, b, TINY_QUERY, "2")
    lines = text.splitlines()
    assert lines[0] == f"Query (Id: 2) {TINY_QUERY}"
    assert "Rank: TK 1, BM25 3 (judged as relevant, Id: d1)" in lines[2]
    assert "(not relevant, Id: d2)" in lines[2]
    table = table_lines(a)
    assert table[0].split() == ["mu_k", "s^k_log"]
    labels = [row.split()[0] for row in table]
    assert labels[1:4] == ["*0.9", "*0.3", "-0.3"]
    assert labels[-5:] == ["------", "s_log", "s_len", "------", "s"]
    assert f"{a.breakdown.s:.2f}" in table[-1]


def test_annotation_marks_only_highlighted_kernels():
    _, _, a, _ = _reports()
    out = annotate_text(a)
    for tok, aff in zip(a.doc_tokens, a.affiliation):
        if aff in a.highlight:
            assert f"[{tok}|{aff:g}]" in out


def test_html_escapes_and_has_two_tables():
    model, q, a, b = _reports()
    a.doc_tokens[0] = "<b>"
    html = render_html(a, b, "x & y", "7")
    assert html.count("<table>") == 2
    assert "&lt;b&gt;" in html and "x &amp; y" in html


def test_alpha_override_reaches_the_report():
    model, q, a, _ = _reports()
    raw = explain(model, q, model.encode_doc(TINY_DOC), alpha_override=1.0)
    assert raw.breakdown.s == model.forward(q, model.encode_doc(TINY_DOC), alpha_override=1.0).s
    assert raw.breakdown.s != pytest.approx(a.breakdown.s, abs=0)
