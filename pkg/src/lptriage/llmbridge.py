"""Pattern-guided prompting: build few-shot prompts, call a chat endpoint,
parse constrained verdicts, replay recorded transcripts, and export
fine-tuning files.

Every request/response pair is appended to a transcript keyed by the SHA-256
of the rendered prompt, so any evaluation can be replayed byte-identically
without network access or API spend.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import requests

from .corpus import Dataset, IssueReport, Label
from .errors import (
    EndpointUnreachable,
    InsufficientExemplars,
    PromptBudgetExceeded,
    RateLimited,
    TranscriptMiss,
    UnlabeledData,
)
from .lexicon import POS, Lexicon
from .patterns import Level, MatchReport, PatternSet
from .textproc import ProcessedSentence

INSTRUCTION_HEADER = (
    "Instruction: Follow the given linguistic patterns as reference examples. "
    "Analyze the provided bug report and determine whether it describes a "
    "concurrency bug. Base your reasoning on the relationship between the "
    "report content and the patterns."
)
CLASSIFICATION_CUE = "[Concurrent bug or not]:"

LEVEL_TAGS = {
    Level.WORD: "[pattern:word]",
    Level.PHRASE: "[pattern:phrase]",
    Level.SENTENCE: "[pattern:sentence]",
    Level.BUG_REPORT: "[pattern:bug report]",
}

EXPORT_FORMAT = "lptriage-finetune"
EXPORT_VERSION = 1


class Verdict(str, Enum):
    YES = "Yes"
    NO = "No"
    UNPARSEABLE = "Unparseable"


@dataclass(frozen=True)
class PromptBundle:
    exemplars: tuple  # (level tag, payload text) pairs, in rendering order
    target_report_text: str
    rendered: str
    seed: int

    @property
    def prompt_hash(self) -> str:
        return hashlib.sha256(self.rendered.encode("utf-8")).hexdigest()


@dataclass
class LlmResponse:
    raw: str
    verdict: Verdict
    latency: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    replayed: bool = False


@dataclass
class EndpointConfig:
    """One uniform chat-completion call shape; vendor differences live here."""

    url: str = ""
    api_key: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout: float = 30.0
    max_attempts: int = 3
    backoff: float = 0.5
    transcript_path: Optional[str] = None
    replay_only: bool = False
    token_budget: Optional[int] = None  # estimated prompt tokens

    @staticmethod
    def from_env(**overrides) -> "EndpointConfig":
        cfg = EndpointConfig(
            url=os.environ.get("LPTRIAGE_LLM_URL", ""),
            api_key=os.environ.get("LPTRIAGE_LLM_KEY", ""),
            model=os.environ.get("LPTRIAGE_LLM_MODEL", ""),
        )
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        return cfg


def _exemplar_payload(pattern) -> str:
    level = pattern.level
    if level == Level.WORD:
        return pattern.keyword
    if level == Level.PHRASE:
        if pattern.description:
            return pattern.description
        return "(" + ", ".join(s.category for s in pattern.slots) + ")"
    if level == Level.SENTENCE:
        return pattern.description or pattern.name
    return f"Root cause: {pattern.name.lower()}"


def estimate_tokens(text: str) -> int:
    # deliberately crude: ~4 chars per token
    return (len(text) + 3) // 4


def build_prompt(
    pattern_set: PatternSet,
    report_or_text,
    exemplar_count=1,
    seed: int = 0,
    token_budget: Optional[int] = None,
) -> PromptBundle:
    """Few-shot prompt with pattern exemplars per level, shuffled within each
    level by seed.  exemplar_count is an int for all levels or a dict keyed
    by Level; 0 everywhere yields the instruction-plus-report baseline."""
    if isinstance(report_or_text, IssueReport):
        target = report_or_text.text
    else:
        target = str(report_or_text)
    target = " ".join(target.split())

    counts: dict = {}
    for level in (Level.WORD, Level.PHRASE, Level.SENTENCE, Level.BUG_REPORT):
        if isinstance(exemplar_count, dict):
            counts[level] = int(exemplar_count.get(level, exemplar_count.get(level.value, 0)))
        else:
            counts[level] = int(exemplar_count)

    rng = random.Random(seed)
    exemplars: list[tuple[str, str]] = []
    for level in (Level.WORD, Level.PHRASE, Level.SENTENCE, Level.BUG_REPORT):
        pool = pattern_set.by_level(level)
        want = counts[level]
        if want > len(pool):
            raise InsufficientExemplars(
                f"{want} {level.value} exemplars requested, only {len(pool)} patterns available"
            )
        shuffled = pool[:]
        rng.shuffle(shuffled)
        for pat in shuffled[:want]:
            exemplars.append((LEVEL_TAGS[level], _exemplar_payload(pat)))

    lines = [INSTRUCTION_HEADER, ""]
    for tag, payload in exemplars:
        lines.append(f"{tag} {payload}")
    lines.append(f"[bug report] {target}")
    lines.append(CLASSIFICATION_CUE)
    rendered = "\n".join(lines)

    if token_budget is not None and estimate_tokens(rendered) > token_budget:
        raise PromptBudgetExceeded(
            f"rendered prompt ~{estimate_tokens(rendered)} tokens exceeds budget {token_budget}"
        )
    return PromptBundle(tuple(exemplars), target, rendered, seed)


def parse_verdict(raw: str) -> Verdict:
    """Total, idempotent constrained parse: a leading yes/no on the first
    line decides; anything else is Unparseable (callers treat it as No)."""
    if not isinstance(raw, str):
        return Verdict.UNPARSEABLE
    first_line = raw.strip().splitlines()[0] if raw.strip() else ""
    word = first_line.strip().lstrip("\"'([{*-# ").rstrip()
    head = ""
    for ch in word:
        if ch.isalpha():
            head += ch
        else:
            break
    head = head.lower()
    if head == "yes":
        return Verdict.YES
    if head == "no":
        return Verdict.NO
    return Verdict.UNPARSEABLE


# ---------------------------------------------------------------------------
# Transcripts

class Transcript:
    """Line-delimited request/response log keyed by prompt hash.

    Appends are serialized through one lock so concurrent queries share a
    single writer.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._cache: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path.is_file():
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    if "prompt_hash" in rec:
                        self._cache[rec["prompt_hash"]] = rec["raw_response"]

    def lookup(self, prompt_hash: str) -> Optional[str]:
        with self._lock:
            return self._cache.get(prompt_hash)

    def append(self, prompt_hash: str, rendered_prompt: str, raw_response: str) -> None:
        with self._lock:
            self._cache[prompt_hash] = raw_response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(
                    json.dumps(
                        {
                            "prompt_hash": prompt_hash,
                            "rendered_prompt": rendered_prompt,
                            "raw_response": raw_response,
                            "timestamp": time.time(),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def query(config: EndpointConfig, bundle: PromptBundle) -> LlmResponse:
    """Resolve a prompt against the transcript first, then the live endpoint
    with exponential backoff.  Every live response is recorded."""
    if config.token_budget is not None and estimate_tokens(bundle.rendered) > config.token_budget:
        raise PromptBudgetExceeded(
            f"prompt ~{estimate_tokens(bundle.rendered)} tokens over budget {config.token_budget}"
        )
    transcript = Transcript(config.transcript_path) if config.transcript_path else None
    if transcript is not None:
        recorded = transcript.lookup(bundle.prompt_hash)
        if recorded is not None:
            return LlmResponse(recorded, parse_verdict(recorded), replayed=True)
    if config.replay_only:
        raise TranscriptMiss(f"prompt {bundle.prompt_hash[:12]} not in transcript")
    if not config.url:
        raise EndpointUnreachable("no endpoint URL configured and prompt not in transcript")

    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    payload = {
        "model": config.model,
        "temperature": config.temperature,
        "messages": [{"role": "user", "content": bundle.rendered}],
    }
    last_error: Exception = EndpointUnreachable("no attempts made")
    rate_limited = False
    for attempt in range(config.max_attempts):
        start = time.time()
        try:
            resp = requests.post(config.url, json=payload, headers=headers, timeout=config.timeout)
            if resp.status_code == 429:
                rate_limited = True
                raise RateLimited("429 from endpoint")
            resp.raise_for_status()
            data = resp.json()
            raw = data["choices"][0]["message"]["content"]
            latency = time.time() - start
            usage = data.get("usage", {})
            if transcript is not None:
                transcript.append(bundle.prompt_hash, bundle.rendered, raw)
            return LlmResponse(
                raw,
                parse_verdict(raw),
                latency=latency,
                prompt_tokens=usage.get("prompt_tokens", 0),
                completion_tokens=usage.get("completion_tokens", 0),
            )
        except Exception as exc:  # noqa: BLE001 - every failure is retried
            last_error = exc
            if attempt + 1 < config.max_attempts:
                time.sleep(config.backoff * (2 ** attempt))
    if rate_limited:
        raise RateLimited(f"rate limited after {config.max_attempts} attempts")
    raise EndpointUnreachable(f"{config.url}: {last_error}")


def classify_with_llm(config: EndpointConfig, bundle: PromptBundle) -> Label:
    """Conservative mapping: only an explicit Yes is positive."""
    response = query(config, bundle)
    return Label.CONCURRENCY if response.verdict == Verdict.YES else Label.NON_CONCURRENCY


def query_many(config: EndpointConfig, bundles: Sequence[PromptBundle],
               max_in_flight: int = 1) -> list[LlmResponse]:
    """Issue queries with a bounded in-flight cap; results keep input order."""
    if max_in_flight <= 1:
        return [query(config, b) for b in bundles]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(lambda b: query(config, b), bundles))


# ---------------------------------------------------------------------------
# Adjudicator backed by the same endpoint/transcript machinery

class LlmAdjudicator:
    """Confirms sentence/report-level candidates under a constrained
    vocabulary; out-of-vocabulary replies count as rejections."""

    def __init__(self, config: EndpointConfig):
        self.config = config

    def confirm_sentence(self, sentence_text: str, candidate_names, all_names) -> set:
        confirmed = set()
        vocabulary = ", ".join(all_names)
        for name in candidate_names:
            prompt = (
                "Instruction: You verify whether a sentence from a bug report "
                "expresses a named concurrency pattern. Answer with exactly one "
                f"word: Yes or No.\n[allowed patterns] {vocabulary}\n"
                f"[candidate pattern] {name}\n[sentence] {sentence_text}\n"
                "[expresses the pattern]:"
            )
            bundle = PromptBundle((), sentence_text, prompt, 0)
            if query(self.config, bundle).verdict == Verdict.YES:
                confirmed.add(name)
        return confirmed

    def confirm_report(self, report_text: str, evidence_sentences, br_name: str) -> bool:
        evidence = " ".join(evidence_sentences)
        prompt = (
            "Instruction: You verify whether the root cause of a bug report "
            "falls under a named concurrency category. Answer with exactly one "
            f"word: Yes or No.\n[category] {br_name}\n"
            f"[candidate sentences] {evidence}\n[bug report] {report_text}\n"
            "[root cause matches]:"
        )
        bundle = PromptBundle((), report_text, prompt, 0)
        return query(self.config, bundle).verdict == Verdict.YES


# ---------------------------------------------------------------------------
# Fine-tune export

def _normalize(text: str) -> str:
    return " ".join(text.split())


def render_finetune_text(
    report: IssueReport,
    match_report: MatchReport,
    pattern_set: PatternSet,
    sentences: Sequence[ProcessedSentence],
) -> str:
    """The exact record text form: [CLS] [PATTERN:WORD] ... [SEP], single
    spaces between blocks; empty blocks keep their markers."""
    by_index = {s.index: s for s in sentences}

    words: list[str] = []
    for hit in match_report.word_hits:
        keyword = pattern_set.get(hit.pattern_id).keyword
        if keyword not in words:
            words.append(keyword)

    phrases: list[str] = []
    for hit in match_report.phrase_hits:
        sent = by_index.get(hit.sentence_index)
        if sent is None:
            continue
        inside = [
            t.lemma for t in sent.tokens
            if t.span[0] >= hit.span[0] and t.span[1] <= hit.span[1]
            and t.pos != POS.OTHER  # drop filler between the slot witnesses
        ]
        rendered = "(" + ", ".join(inside) + ")"
        if rendered not in phrases:
            phrases.append(rendered)

    evidence: list[str] = []
    for hit in match_report.sentence_hits:
        sent = by_index.get(hit.sentence_index)
        if sent is not None and _normalize(sent.text) not in evidence:
            evidence.append(_normalize(sent.text))

    causes: list[str] = []
    for hit in match_report.br_hits:
        name = pattern_set.get(hit.pattern_id).name
        rendered = f"Root cause: {name.lower()}"
        if rendered not in causes:
            causes.append(rendered)

    blocks = [
        "[CLS]",
        "[PATTERN:WORD]", " ".join(words),
        "[PATTERN:PHRASE]", " ".join(phrases),
        "[PATTERN:SENTENCE]", " ".join(evidence),
        "[PATTERN:BUG REPORT]", " ".join(causes),
        "[BUG REPORT]", _normalize(report.text),
        "[SEP]",
    ]
    return " ".join(b for b in blocks if b != "")


def export_finetune_file(
    dataset: Dataset,
    match_reports: dict,
    pattern_set: PatternSet,
    path,
    lexicon: Optional[Lexicon] = None,
    processed: Optional[dict] = None,
) -> int:
    """One {text, label} record per labeled report; returns the record count."""
    from .textproc import process_report  # local import to avoid cycles at import time

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": EXPORT_FORMAT, "version": EXPORT_VERSION}) + "\n")
        for report in dataset:
            if report.label == Label.UNLABELED:
                raise UnlabeledData(f"report {report.id!r} is Unlabeled")
            if processed is not None and report.id in processed:
                sentences = processed[report.id]
            else:
                if lexicon is None:
                    raise ValueError("export needs either processed sentences or a lexicon")
                sentences = process_report(report, lexicon)
            text = render_finetune_text(report, match_reports[report.id], pattern_set, sentences)
            label = 1 if report.label == Label.CONCURRENCY else 0
            f.write(json.dumps({"text": text, "label": label}, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_finetune_file(path) -> list[tuple[str, int]]:
    """Re-parse an export; returns (text, label) pairs, header excluded."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("format") == EXPORT_FORMAT:
                continue
            out.append((rec["text"], int(rec["label"])))
    return out
