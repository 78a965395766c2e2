from __future__ import annotations

import json

import pytest
import requests

from evidencer.acquire import load_corpus, save_corpus
from evidencer.cli import EXIT_OK, EXIT_TRANSPORT, EXIT_VALIDATION, main
from evidencer.synthetic import SyntheticSpec, generate

FAST = ["--k", "3", "--n-trees", "5"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_corpus(generate(SyntheticSpec(n_docs=40, seed=3)), d / "raw.jsonl")
    assert main(["annotate", "--in", str(d / "raw.jsonl"), "--out", str(d / "labeled.jsonl")]) == EXIT_OK
    return d


def test_annotate_labels_everything(workdir, capsys):
    recs = load_corpus(workdir / "labeled.jsonl")
    assert len(recs) == 40 and all(r.label is not None for r in recs)


def test_featurize_writes_matrix(workdir):
    out = workdir / "x.txt"
    assert main(["featurize", "--in", str(workdir / "labeled.jsonl"), "--out", str(out)]) == EXIT_OK
    rows = (workdir / "x.txt.rows").read_text().splitlines()
    vocab = (workdir / "x.txt.vocab").read_text().splitlines()
    assert len(rows) == 40
    cells = [line.split() for line in out.read_text().splitlines()]
    assert max(int(r) for r, _, _ in cells) < 40
    assert max(int(c) for _, c, _ in cells) < len(vocab)


def test_featurize_rejects_unlabeled(workdir):
    rc = main(["featurize", "--in", str(workdir / "raw.jsonl"), "--out", str(workdir / "y.txt")])
    assert rc == EXIT_VALIDATION


def test_evaluate_then_report(workdir):
    rep = workdir / "rep"
    rc = main(["evaluate", "--in", str(workdir / "labeled.jsonl"), "--report", str(rep), *FAST])
    assert rc == EXIT_OK
    cell = json.loads((rep / "citances-count-RandomForest.json").read_text())
    assert len(cell["fold_aucs"]) == 3
    assert (rep / "citances-count-RandomForest.roc.svg").exists()
    assert (rep / "summary.tsv").read_text().count("\n") == 2
    out = workdir / "tables"
    rc = main(["report", "--report", str(rep), "--in", str(workdir / "labeled.jsonl"),
               "--out", str(out), "--tables", "mesh,stats", "--roc"])
    assert rc == EXIT_OK
    assert (out / "descriptive_stats.tsv").exists()
    assert (out / "citances-count-RandomForest.mesh.tsv").read_text().startswith("cohort\tterm\tcount")
    assert (out / "citances-count-RandomForest.roc.csv").read_bytes() == (
        rep / "citances-count-RandomForest.roc.csv"
    ).read_bytes()


def test_config_file_and_flag_precedence(workdir):
    cfg = workdir / "run.ini"
    cfg.write_text(
        "[evaluate]\n"
        f"in = {workdir / 'labeled.jsonl'}\n"
        f"report = {workdir / 'cfgrep'}\n"
        "k = 4\nn-trees = 3\nsource = abstract\n",
        encoding="utf-8",
    )
    assert main(["--config", str(cfg), "evaluate", "--k", "3"]) == EXIT_OK
    rep = json.loads((workdir / "cfgrep" / "abstract-count-RandomForest.json").read_text())
    assert rep["config"]["k"] == 3 and rep["config"]["n_trees"] == 3
    bad = workdir / "bad.ini"
    bad.write_text("[evaluate]\nno-such-option = 1\n", encoding="utf-8")
    assert main(["--config", str(bad), "evaluate"]) == EXIT_VALIDATION
    bad.write_text("[evaluate]\nclassifier = svm\n", encoding="utf-8")
    assert main(["--config", str(bad), "evaluate"]) == EXIT_VALIDATION


def test_bad_inputs_exit_2(workdir, tmp_path):
    assert main(["annotate", "--in", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    assert main(["evaluate", "--in", str(workdir / "labeled.jsonl")]) == EXIT_VALIDATION
    assert main(["report", "--report", str(tmp_path), "--tables", "bogus"]) == EXIT_VALIDATION
    junk = tmp_path / "junk.jsonl"
    junk.write_text("{]\n", encoding="utf-8")
    assert main(["annotate", "--in", str(junk), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_ingest_from_fixtures(acquire_fixtures, tmp_path, no_network, capsys):
    pmids = tmp_path / "pmids.txt"
    pmids.write_text("11111111\n22222222\n55555555\n", encoding="utf-8")
    recs = tmp_path / "recs.tsv"
    recs.write_text("pmid\texpert\ttags\tdate\n11111111\ta\tRefutation\t2010-05\n11111111\tb\tControversial\t\n",
                    encoding="utf-8")
    out = tmp_path / "c.jsonl"
    rc = main(["ingest", "--pmids", str(pmids), "--out", str(out), "--fixtures", str(acquire_fixtures),
               "--recommendations", str(recs), "--rate-limit", "1000"])
    assert rc == EXIT_OK
    got = load_corpus(out)
    assert [r.pmid for r in got] == ["11111111", "22222222"]
    assert len(got[0].citances) == 2 and len(got[0].recommendations) == 2
    assert len(got[1].citances) == 2
    assert "1 not found" in capsys.readouterr().out


def test_transport_failure_exit_3(tmp_path, monkeypatch, no_network):
    def down(self, url, **kwargs):
        raise requests.ConnectionError("unreachable")

    monkeypatch.setattr(requests.Session, "get", down)
    pmids = tmp_path / "pmids.txt"
    pmids.write_text("11111111\n", encoding="utf-8")
    rc = main(["ingest", "--pmids", str(pmids), "--out", str(tmp_path / "c.jsonl"),
               "--retries", "0", "--rate-limit", "1000"])
    assert rc == EXIT_TRANSPORT
