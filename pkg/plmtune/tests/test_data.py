import json

import pytest

from plmtune.data import (
    MalformedExport,
    SPECIAL_TOKENS,
    Vocab,
    read_export,
    strip_pattern_blocks,
    tokenize,
)


def test_read_export_skips_header(export_path):
    records = read_export(export_path)
    assert len(records) == 300
    assert all(label in (0, 1) for _t, label in records)
    assert records[0][0].startswith("[CLS] [PATTERN:WORD]")


def test_missing_label_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    lines = [
        json.dumps({"format": "lptriage-finetune", "version": 1}),
        json.dumps({"text": "[CLS] ok [SEP]", "label": 1}),
        json.dumps({"text": "[CLS] broken [SEP]"}),
    ]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedExport) as err:
        read_export(path)
    assert err.value.line_no == 3
    assert "label" in str(err.value)


def test_invalid_json_is_malformed(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "x", "label": 1}\nnot json\n')
    with pytest.raises(MalformedExport) as err:
        read_export(path)
    assert err.value.line_no == 2


def test_bad_label_value(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps({"text": "x", "label": 2}) + "\n")
    with pytest.raises(MalformedExport):
        read_export(path)


def test_markers_tokenize_atomically():
    text = "[CLS] [PATTERN:BUG REPORT] Root cause: lock issue [BUG REPORT] It hangs. [SEP]"
    tokens = tokenize(text)
    assert "[PATTERN:BUG REPORT]" in tokens
    assert "[BUG REPORT]" in tokens
    assert "bug" not in tokens  # the marker never splits into words
    assert "hangs" in tokens


def test_strip_pattern_blocks_keeps_frame():
    text = ("[CLS] [PATTERN:WORD] lock [PATTERN:PHRASE] (lock, hang) "
            "[PATTERN:SENTENCE] The lock hangs. [PATTERN:BUG REPORT] Root cause: "
            "lock issue [BUG REPORT] The lock hangs forever. [SEP]")
    stripped = strip_pattern_blocks(text)
    assert stripped == "[CLS] [BUG REPORT] The lock hangs forever. [SEP]"


def test_vocab_roundtrip_and_specials():
    vocab = Vocab.build(["[CLS] the lock hangs [SEP]", "[CLS] the page loads [SEP]"])
    for i, tok in enumerate(SPECIAL_TOKENS):
        assert vocab.token_to_id[tok] == i
    again = Vocab.from_json(vocab.to_json())
    assert again.token_to_id == vocab.token_to_id
    ids, truncated = vocab.encode(tokenize("[CLS] the lock zzz [SEP]"), max_len=10)
    assert not truncated
    assert ids[0] == vocab.token_to_id["[CLS]"]
    assert ids[3] == 1  # unknown word maps to [UNK]
