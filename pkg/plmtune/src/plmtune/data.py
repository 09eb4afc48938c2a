"""Export-file parsing, tokenization and vocabulary for the trainer.

The input format is the upstream fine-tune export: one JSON object per line
with ``text`` and ``label`` fields after a versioned header record.  The
bracketed block markers ([CLS], [PATTERN:WORD], ..., [SEP]) are structural
delimiters and tokenize as single special tokens.
"""

import json
import re
from pathlib import Path

EXPORT_FORMAT = "lptriage-finetune"

SPECIAL_TOKENS = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]",
    "[PATTERN:WORD]", "[PATTERN:PHRASE]", "[PATTERN:SENTENCE]",
    "[PATTERN:BUG REPORT]", "[BUG REPORT]",
]
PAD_ID = 0
UNK_ID = 1

_MARKER_RE = re.compile(
    r"\[CLS\]|\[SEP\]|\[PATTERN:WORD\]|\[PATTERN:PHRASE\]|\[PATTERN:SENTENCE\]"
    r"|\[PATTERN:BUG REPORT\]|\[BUG REPORT\]"
)
_WORD_RE = re.compile(r"[A-Za-z0-9_]+(?:[.'\-][A-Za-z0-9_]+)*(?:\(\))?|[(),:;!?]")


class MalformedExport(ValueError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


def read_export(path) -> list[tuple[str, int]]:
    """Parse an export file into (text, label) pairs; strict about shape."""
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedExport(line_no, f"invalid JSON: {exc}")
            if line_no == 1 and rec.get("format") == EXPORT_FORMAT:
                continue
            if "text" not in rec:
                raise MalformedExport(line_no, "missing 'text' field")
            if "label" not in rec:
                raise MalformedExport(line_no, "missing 'label' field")
            label = rec["label"]
            if label not in (0, 1):
                raise MalformedExport(line_no, f"label must be 0 or 1, got {label!r}")
            records.append((str(rec["text"]), int(label)))
    if not records:
        raise MalformedExport(0, "no records in export")
    return records


def strip_pattern_blocks(text: str) -> str:
    """Report-text-only variant of a record: drop everything between
    [PATTERN:WORD] and [BUG REPORT], keeping the frame markers."""
    m = re.search(r"\[PATTERN:WORD\].*?\[BUG REPORT\]", text, re.DOTALL)
    if not m:
        return text
    return text[: m.start()] + "[BUG REPORT]" + text[m.end():]


def tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    for m in _MARKER_RE.finditer(text):
        tokens.extend(w.lower() for w in _WORD_RE.findall(text[pos:m.start()]))
        tokens.append(m.group(0))
        pos = m.end()
    tokens.extend(w.lower() for w in _WORD_RE.findall(text[pos:]))
    return tokens


class Vocab:
    def __init__(self, token_to_id: dict):
        self.token_to_id = token_to_id

    def __len__(self):
        return len(self.token_to_id)

    def encode(self, tokens, max_len: int):
        ids = [self.token_to_id.get(t, UNK_ID) for t in tokens[:max_len]]
        truncated = len(tokens) > max_len
        return ids, truncated

    def to_json(self) -> str:
        return json.dumps(self.token_to_id, ensure_ascii=False)

    @staticmethod
    def from_json(payload: str) -> "Vocab":
        return Vocab(json.loads(payload))

    @staticmethod
    def build(texts, max_size: int = 8000) -> "Vocab":
        counts = {}
        for text in texts:
            for tok in tokenize(text):
                if tok in SPECIAL_TOKENS:
                    continue
                counts[tok] = counts.get(tok, 0) + 1
        token_to_id = {tok: i for i, tok in enumerate(SPECIAL_TOKENS)}
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        for tok, _count in ranked[: max_size - len(token_to_id)]:
            token_to_id[tok] = len(token_to_id)
        return Vocab(token_to_id)
