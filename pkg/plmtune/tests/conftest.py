import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
EXPORT_FIXTURE = FIXTURES / "mini_corpus_finetune.jsonl"


@pytest.fixture(scope="session")
def export_path():
    return EXPORT_FIXTURE


@pytest.fixture
def tiny_export(tmp_path):
    """A small, perfectly separable export for fast training tests."""
    path = tmp_path / "tiny.jsonl"
    with open(path, "w") as f:
        f.write(json.dumps({"format": "lptriage-finetune", "version": 1}) + "\n")
        for i in range(12):
            label = 1 if i % 2 == 0 else 0
            word = "deadlock lock" if label else ""
            body = ("The worker thread hangs on the shared lock." if label
                    else "The settings page renders a blank panel.")
            text = (f"[CLS] [PATTERN:WORD] {word} [PATTERN:PHRASE] "
                    f"[PATTERN:SENTENCE] [PATTERN:BUG REPORT] [BUG REPORT] "
                    f"Report {i}. {body} [SEP]").replace("  ", " ")
            f.write(json.dumps({"text": text, "label": label}) + "\n")
    return path
