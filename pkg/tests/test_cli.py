import json
from pathlib import Path

import pytest

from nameorigin.cli import main

from conftest import MOCK_SCRIPTS
from synth import corpus_tsv, make_corpus

LABELS = ["Japanese", "Korean", "Russian", "Welsh", "Brazilian", "Nigerian"]


@pytest.fixture
def workspace(tmp_path):
    corpus = tmp_path / "corpus.tsv"
    corpus.write_text(corpus_tsv(make_corpus(LABELS, 60, seed=11)), "utf-8")
    config = {
        "seed": 5,
        "out_dir": str(tmp_path / "run"),
        "dataset": {"raw_path": str(corpus), "min_samples": 20, "cap": 50},
        "features": {"n_min": 1, "n_max": 3, "max_features": 3000, "lowercase": True},
        "svm": {"C": 1.0, "epochs": 8, "tolerance": 0.0},
        "fasttext": {"buckets": 4096, "dim": 16, "lr": 0.5, "epochs": 4,
                     "n_min": 2, "n_max": 4},
        "eval": {"ks": [1, 3, 5], "granularity": "nationality", "mode": "project",
                 "strata": True, "confusion_top_n": 10, "matrix_top_n": 5},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config), "utf-8")
    return tmp_path, config_path


def run_cli(*argv) -> int:
    return main(list(argv))


def test_full_pipeline(workspace, capsys):
    tmp_path, config = workspace
    out = tmp_path / "run"

    assert run_cli("--config", str(config), "prepare") == 0
    captured = capsys.readouterr().out
    assert "labels: 6" in captured
    manifest = json.loads((out / "splits" / "manifest.json").read_text())
    assert manifest["totals"]["train"] == 6 * 40
    assert manifest["totals"]["dev"] == 6 * 5
    assert manifest["totals"]["test"] == 6 * 5

    assert run_cli("--config", str(config), "train", "--model", "svm") == 0
    assert (out / "models" / "svm.npz").exists()
    assert (out / "models" / "vocab.json").exists()

    assert run_cli("--config", str(config), "train", "--model", "fasttext") == 0
    assert (out / "models" / "fasttext.npz").exists()

    assert run_cli("--config", str(config), "predict", "--model", "svm",
                   "--split", "test", "--k", "5") == 0
    dump = out / "dumps" / "svm_test.jsonl"
    rows = [json.loads(line) for line in dump.read_text().splitlines()]
    assert len(rows) == 30
    assert all(len(r["predicted"]) == 5 for r in rows)
    assert all(r["strategy"] == "svm" for r in rows)

    assert run_cli("--config", str(config), "predict", "--model", "fasttext",
                   "--split", "test", "--k", "1") == 0
    ft_rows = [json.loads(line) for line in
               (out / "dumps" / "fasttext_test.jsonl").read_text().splitlines()]
    assert all(len(r["predicted"]) == 1 for r in ft_rows)

    assert run_cli("--config", str(config), "eval", "--dump", str(dump)) == 0
    report = json.loads((out / "eval" / "report.json").read_text())
    entry = report["entries"][0]
    assert entry["method"] == "svm"
    assert entry["report"]["precision_at"]["1"] == entry["report"]["accuracy"]
    assert (out / "eval" / "tables" / "results.md").exists()
    assert (out / "eval" / "plotdata" / "strata_bars.csv").exists()
    assert (out / "eval" / "plotdata" / "length_histogram.csv").exists()

    assert run_cli("--config", str(config), "eval", "--dump", str(dump),
                   "--granularity", "region") == 0
    region_report = json.loads((out / "eval" / "report.json").read_text())
    assert region_report["entries"][0]["report"]["granularity"] == "region"
    assert region_report["entries"][0]["report"]["mode"] == "project"
    assert region_report["entries"][0]["report"]["accuracy"] >= entry["report"]["accuracy"]

    assert run_cli("--config", str(config), "report",
                   "--report-json", str(out / "eval" / "report.json"),
                   "--out-dir", str(out / "rendered")) == 0
    assert (out / "rendered" / "tables" / "results.md").exists()


def test_eval_compare_cross_model(workspace):
    tmp_path, config = workspace
    out = tmp_path / "run"
    assert run_cli("--config", str(config), "prepare") == 0
    assert run_cli("--config", str(config), "train", "--model", "svm") == 0
    assert run_cli("--config", str(config), "train", "--model", "fasttext") == 0
    assert run_cli("--config", str(config), "predict", "--model", "svm") == 0
    assert run_cli("--config", str(config), "predict", "--model", "fasttext") == 0
    assert run_cli("--config", str(config), "eval",
                   "--dump", str(out / "dumps" / "svm_test.jsonl"),
                   str(out / "dumps" / "fasttext_test.jsonl"), "--compare") == 0
    cases = json.loads((out / "eval" / "cases.json").read_text())
    assert cases["a"] == "svm" and cases["b"] == "fasttext"
    assert sum(cases["sizes"].values()) == 30


def test_llm_mock_pipeline(workspace):
    tmp_path, config = workspace
    out = tmp_path / "run"
    assert run_cli("--config", str(config), "prepare") == 0
    assert run_cli("--config", str(config), "llm",
                   "--strategy", "zero_shot", "--provider", "mock",
                   "--script", str(MOCK_SCRIPTS / "echo.json"),
                   "--split", "test", "--limit", "10") == 0
    dump = out / "dumps" / "zero_shot_test.jsonl"
    rows = [json.loads(line) for line in dump.read_text().splitlines()]
    assert len(rows) == 10
    assert all(r["predicted"][0] == "Japanese" for r in rows)
    traces = [json.loads(line) for line in
              (out / "traces" / "zero_shot_test.jsonl").read_text().splitlines()]
    assert all(len(t["messages"]) == 1 for t in traces)
    assert run_cli("--config", str(config), "eval", "--dump", str(dump)) == 0


def test_llm_least_to_most_traces_three_stages(workspace):
    tmp_path, config = workspace
    out = tmp_path / "run"
    assert run_cli("--config", str(config), "prepare") == 0
    assert run_cli("--config", str(config), "llm",
                   "--strategy", "least_to_most", "--provider", "mock",
                   "--script", str(MOCK_SCRIPTS / "least_to_most.json"),
                   "--split", "test", "--limit", "3") == 0
    traces = [json.loads(line) for line in
              (out / "traces" / "least_to_most_test.jsonl").read_text().splitlines()]
    assert len(traces) == 3


def test_prepare_empty_filter_exits_3(workspace):
    tmp_path, config = workspace
    cfg = json.loads(Path(config).read_text())
    cfg["dataset"]["min_samples"] = 1_000_000
    cfg["dataset"]["cap"] = 2_000_000
    config2 = tmp_path / "config2.json"
    config2.write_text(json.dumps(cfg), "utf-8")
    assert run_cli("--config", str(config2), "prepare") == 3


def test_missing_splits_is_data_error(workspace):
    _, config = workspace
    assert run_cli("--config", str(config), "train", "--model", "svm") == 3


def test_missing_raw_corpus_is_config_or_data_error(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"out_dir": str(tmp_path / "run")}), "utf-8")
    assert run_cli("--config", str(config), "prepare") == 2  # no path configured
    config.write_text(json.dumps({
        "out_dir": str(tmp_path / "run"),
        "dataset": {"raw_path": str(tmp_path / "nope.tsv")},
    }), "utf-8")
    assert run_cli("--config", str(config), "prepare") == 3  # path set but absent


def test_vocab_fingerprint_mismatch_refused(workspace):
    tmp_path, config = workspace
    out = tmp_path / "run"
    assert run_cli("--config", str(config), "prepare") == 0
    assert run_cli("--config", str(config), "train", "--model", "svm") == 0
    # refit a vocabulary on different data and try to predict with it
    from nameorigin.features import NgramConfig, fit_vocabulary

    rogue = fit_vocabulary(["zzz", "qqq"], NgramConfig(1, 3, 3000))
    rogue_path = tmp_path / "rogue_vocab.json"
    rogue.save(rogue_path)
    code = run_cli("--config", str(config), "predict", "--model", "svm",
                   "--vocab", str(rogue_path))
    assert code == 3


def test_missing_auth_env_is_startup_error(workspace, monkeypatch):
    tmp_path, config = workspace
    monkeypatch.delenv("NAMEORIGIN_TEST_KEY", raising=False)
    cfg = json.loads(Path(config).read_text())
    cfg["llm"] = {"provider": {"kind": "http", "endpoint": "http://localhost:1/v1",
                               "model": "m", "auth_env": "NAMEORIGIN_TEST_KEY"}}
    config2 = tmp_path / "config3.json"
    config2.write_text(json.dumps(cfg), "utf-8")
    assert run_cli("--config", str(config2), "prepare") == 0
    code = run_cli("--config", str(config2), "llm", "--strategy", "zero_shot",
                   "--split", "test", "--limit", "1")
    assert code == 2


def test_same_seed_same_fingerprint(workspace):
    tmp_path, config = workspace
    assert run_cli("--config", str(config), "prepare",
                   "--splits", str(tmp_path / "s1")) == 0
    assert run_cli("--config", str(config), "prepare",
                   "--splits", str(tmp_path / "s2")) == 0
    m1 = json.loads((tmp_path / "s1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "s2" / "manifest.json").read_text())
    assert m1["fingerprint"] == m2["fingerprint"]
    m3_dir = tmp_path / "s3"
    assert run_cli("--config", str(config), "--seed", "99", "prepare",
                   "--splits", str(m3_dir)) == 0
    m3 = json.loads((m3_dir / "manifest.json").read_text())
    assert m3["fingerprint"] != m1["fingerprint"]
