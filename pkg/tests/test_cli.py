import pytest

from tkrank import cli
from tkrank.config import RunConfig, TKConfig, TrainConfig
from tkrank.metrics import read_run
from tkrank.synthetic import marker_corpus, write_workspace


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    corpus = marker_corpus(n_docs=30, n_queries=10, n_triples=64, n_candidates=8, seed=9)
    cfg = RunConfig(model=TKConfig.small(), train=TrainConfig(validate_every=10, max_steps=20))
    paths = write_workspace(root, corpus, cfg, seed=9)
    paths["ckpt"] = root / "model.ckpt"
    assert cli.main([
        "train", "--config", str(paths["config"]), "--collection", str(paths["collection"]),
        "--triples", str(paths["triples"]), "--embeddings", str(paths["vectors"]),
        "--val-queries", str(paths["queries"]), "--val-run", str(paths["run"]), "--qrels", str(paths["qrels"]),
        "--output", str(paths["ckpt"]),
    ]) == 0
    paths["index"] = root / "bm25.idx"
    assert cli.main(["index", "--collection", str(paths["collection"]), "--output", str(paths["index"])]) == 0
    return paths


def common(p):
    return ["--checkpoint", str(p["ckpt"]), "--collection", str(p["collection"]), "--queries", str(p["queries"])]


def test_search_and_evaluate(workspace, tmp_path, capsys):
    out = tmp_path / "bm25.run"
    assert cli.main(["search", "--index", str(workspace["index"]), "--queries", str(workspace["queries"]),
                     "--k", "5", "--output", str(out)]) == 0
    run = read_run(out)
    assert all(len(r) <= 5 for r in run.rankings.values())
    assert cli.main(["evaluate", "--run", str(out), "--qrels", str(workspace["qrels"])]) == 0
    report = capsys.readouterr().out
    assert [line.split("\t")[0] for line in report.splitlines()] == ["map", "ndcg@10", "mrr@10", "p@10"]


def test_full_mode_only_reorders_above_depth(workspace, tmp_path):
    bm = tmp_path / "bm25.run"
    cli.main(["search", "--index", str(workspace["index"]), "--queries", str(workspace["queries"]),
              "--k", "12", "--output", str(bm)])
    out = tmp_path / "full.run"
    assert cli.main(["rerank", *common(workspace), "--mode", "full", "--index", str(workspace["index"]),
                     "--k", "12", "--depth", "4", "--output", str(out)]) == 0
    first, merged = read_run(bm), read_run(out)
    for qid, ranked in first.rankings.items():
        docs = [d for d, _ in ranked]
        got = [d for d, _ in merged.rankings[qid]]
        assert sorted(got) == sorted(docs)
        assert got[4:] == docs[4:]
        assert sorted(got[:4]) == sorted(docs[:4])
    merged.validate()


def test_rerank_mode_rescored_every_candidate(workspace, tmp_path):
    out = tmp_path / "tk.run"
    assert cli.main(["rerank", *common(workspace), "--run", str(workspace["run"]), "--output", str(out)]) == 0
    src, got = read_run(workspace["run"]), read_run(out)
    for qid in src.rankings:
        assert sorted(d for d, _ in src.rankings[qid]) == sorted(d for d, _ in got.rankings[qid])


def test_depth_preset_flag(workspace, tmp_path):
    out = tmp_path / "p.run"
    assert cli.main(["rerank", *common(workspace), "--mode", "full", "--index", str(workspace["index"]),
                     "--depth-preset", "passage", "--output", str(out)]) == 0


def test_tune_depth_and_explain(workspace, tmp_path, capsys):
    assert cli.main(["tune-depth", *common(workspace), "--run", str(workspace["run"]),
                     "--qrels", str(workspace["qrels"]), "--depths", "2,4,8"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1].startswith("best_depth\t")
    html = tmp_path / "e.html"
    run = read_run(workspace["run"])
    docs = [d for d, _ in run.rankings["q0"]][:2]
    assert cli.main(["explain", *common(workspace), "--run", str(workspace["run"]), "--qrels",
                     str(workspace["qrels"]), "--query-id", "q0", "--doc-ids", *docs, "--html",
                     "--output", str(html)]) == 0
    assert html.read_text().count("<table>") == 2
    assert cli.main(["explain", *common(workspace), "--run", str(workspace["run"]), "--query-id", "q0",
                     "--doc-ids", *docs]) == 0
    assert capsys.readouterr().out.startswith("Query (Id: q0)")


def test_ensemble(workspace, tmp_path):
    a = tmp_path / "a.run"
    cli.main(["rerank", *common(workspace), "--run", str(workspace["run"]), "--output", str(a)])
    out = tmp_path / "ens.run"
    assert cli.main(["ensemble", "--runs", str(a), str(a), "--output", str(out)]) == 0
    assert read_run(out).rankings == read_run(a).rankings


@pytest.mark.parametrize("argv, message", [
    (["rerank", "--mode", "full"], "requires --index"),
    (["rerank", "--mode", "rerank"], "requires --run"),
    (["explain", "--run", "RUN", "--query-id", "nope", "--doc-ids", "a", "b"], "unknown query id"),
])
def test_errors_exit_nonzero_with_diagnostic(workspace, capsys, argv, message):
    argv = [a.replace("RUN", str(workspace["run"])) for a in argv]
    extra = ["--output", "/dev/null"] if argv[0] == "rerank" else []
    assert cli.main([argv[0], *common(workspace), *argv[1:], *extra]) == 1
    assert message in capsys.readouterr().err


def test_config_mismatch_names_field(workspace, tmp_path, capsys):
    conf = tmp_path / "other.conf"
    conf.write_text(workspace["config"].read_text().replace("model.heads = 2", "model.heads = 4"))
    rc = cli.main(["rerank", "--config", str(conf), *common(workspace), "--run", str(workspace["run"]),
                   "--output", str(tmp_path / "x.run")])
    assert rc == 1 and "model.heads" in capsys.readouterr().err


def test_missing_file_and_bad_override(workspace, tmp_path, capsys):
    assert cli.main(["evaluate", "--run", str(tmp_path / "missing.run"), "--qrels", str(workspace["qrels"])]) == 1
    assert "error:" in capsys.readouterr().err
    rc = cli.main(["rerank", "--config", str(workspace["config"]), "--set", "model.bogus=1", *common(workspace),
                   "--run", str(workspace["run"]), "--output", str(tmp_path / "x.run")])
    assert rc == 1 and "model.bogus" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "tkrank", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "tune-depth" in proc.stdout
