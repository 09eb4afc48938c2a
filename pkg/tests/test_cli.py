import json
import subprocess
import sys
from pathlib import Path

from lptriage.cli import main

DATA = Path("src/lptriage/data").resolve()
MINI = str(DATA / "mini_corpus.jsonl")
LABELS = str(DATA / "mini_corpus_sentence_labels.jsonl")
FIXTURES = str(DATA / "fixtures_motivating.jsonl")


def run(*argv):
    return main(list(argv))


def test_validate_ok(capsys):
    assert run("validate", "--dataset", MINI) == 0
    assert "ok" in capsys.readouterr().out


def test_missing_required_setting_exits_2(capsys):
    assert run("split") == 2
    assert "dataset" in capsys.readouterr().err


def test_data_error_exits_3(tmp_path, capsys):
    assert run("eval", "--dataset", str(tmp_path / "missing.jsonl")) == 3


def test_endpoint_error_exits_4(tmp_path):
    transcript = tmp_path / "empty.jsonl"
    transcript.write_text("")
    code = run("eval", "--dataset", FIXTURES, "--method", "prompt",
               "--replay", "--transcript", str(transcript), "--out", str(tmp_path))
    assert code == 4


def test_eval_levels_writes_table_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    assert run("eval", "--dataset", MINI, "--levels", "word,phrase,sentence,br",
               "--out", str(out)) == 0
    table = (out / "eval.txt").read_text()
    assert "Match(Word)" in table and "Match(BugReport)" in table
    assert len([l for l in table.splitlines() if l.startswith("Match(")]) == 4
    manifest = json.loads((out / "manifest-eval.json").read_text())
    assert manifest["subcommand"] == "eval"
    assert manifest["input_hashes"]
    csv_manifest = json.loads((out / "eval.csv.manifest.json").read_text())
    assert csv_manifest["seed"] == 0


def test_staged_equals_fused(tmp_path):
    m = tmp_path / "m"
    c1 = tmp_path / "c1"
    c2 = tmp_path / "c2"
    assert run("match", "--dataset", FIXTURES, "--out", str(m)) == 0
    assert run("classify", "--dataset", FIXTURES, "--from-match",
               str(m / "matches.jsonl"), "--level", "br", "--out", str(c1)) == 0
    assert run("classify", "--dataset", FIXTURES, "--level", "br", "--out", str(c2)) == 0
    assert (c1 / "classifications.jsonl").read_bytes() == \
        (c2 / "classifications.jsonl").read_bytes()


def test_split_and_downsample(tmp_path):
    out = tmp_path / "s"
    assert run("split", "--dataset", MINI, "--strategy", "StratifiedKFold",
               "--k", "10", "--seed", "7", "--out", str(out)) == 0
    payload = json.loads((out / "split.json").read_text())
    assert len(payload["splits"]) == 10
    out2 = tmp_path / "d"
    assert run("downsample", "--dataset", MINI, "--positive-fraction", "0.1",
               "--seed", "3", "--out", str(out2)) == 0
    assert (out2 / "dataset.jsonl").exists()


def test_train_then_classify_with_model(tmp_path):
    out = tmp_path / "t"
    assert run("train", "--dataset", MINI, "--kind", "LogisticRegression",
               "--seed", "5", "--out", str(out)) == 0
    out2 = tmp_path / "c"
    assert run("classify", "--dataset", FIXTURES, "--model",
               str(out / "model.txt"), "--out", str(out2)) == 0
    lines = (out2 / "classifications.jsonl").read_text().splitlines()
    assert len(lines) == 4  # header + 3 reports


def test_prompt_render_only(tmp_path):
    out = tmp_path / "p"
    assert run("prompt", "--dataset", FIXTURES, "--seed", "1", "--exemplars", "1",
               "--out", str(out)) == 0
    lines = (out / "prompts.jsonl").read_text().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert rec["rendered"].endswith("[Concurrent bug or not]:")


def test_export_and_saturate_and_mine(tmp_path):
    out = tmp_path / "x"
    assert run("export-finetune", "--dataset", FIXTURES, "--out", str(out)) == 0
    assert (out / "finetune.jsonl").exists()
    out2 = tmp_path / "sat"
    assert run("saturate", "--dataset", MINI, "--sentence-labels", LABELS,
               "--seed", "3", "--out", str(out2)) == 0
    payload = json.loads((out2 / "saturation.json").read_text())
    assert len(payload["points"]) == 10
    out3 = tmp_path / "mine"
    assert run("mine", "--dataset", MINI, "--sentence-labels", LABELS,
               "--out", str(out3)) == 0
    assert json.loads((out3 / "mined.json").read_text())


def test_config_file_precedence(tmp_path, capsys):
    config = tmp_path / "run.ini"
    config.write_text(f"[paths]\ndataset = {MINI}\n\n[eval]\nlevels = word\n")
    out = tmp_path / "o"
    assert run("eval", "--config", str(config), "--out", str(out)) == 0
    table = (out / "eval.txt").read_text()
    assert "Match(Word)" in table and "Match(Phrase)" not in table
    # flag overrides the file
    out2 = tmp_path / "o2"
    assert run("eval", "--config", str(config), "--levels", "br", "--out", str(out2)) == 0
    assert "Match(BugReport)" in (out2 / "eval.txt").read_text()


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "lptriage.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "lptriage" in proc.stdout


def test_missing_lexicon_path_exits_2_naming_field(tmp_path, capsys):
    code = run("eval", "--dataset", MINI, "--lexicon", str(tmp_path / "nope.txt"),
               "--out", str(tmp_path))
    assert code == 2
    assert "lexicon" in capsys.readouterr().err


def test_match_with_jobs_flag(tmp_path):
    serial = tmp_path / "s"
    parallel = tmp_path / "p"
    assert run("match", "--dataset", FIXTURES, "--out", str(serial)) == 0
    assert run("match", "--dataset", FIXTURES, "--jobs", "2", "--out", str(parallel)) == 0
    assert (serial / "matches.jsonl").read_bytes() == (parallel / "matches.jsonl").read_bytes()
