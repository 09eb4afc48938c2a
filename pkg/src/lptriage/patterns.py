"""The four-level pattern set: representation, matching, mining, saturation.

Levels:
  word       - keyword patterns (lemma sequences drawn from the CBG/CME pool)
  phrase     - category-typed slot templates co-occurring within a token gap
  sentence   - named templates of required/forbidden category slots with a
               topic tag; optional lemma qualifiers narrow a slot
  bug report - aggregation templates over sentence-hit topics

Matching is pure and deterministic in rule mode.  An optional adjudicator
(an LLM backend constrained to the template-name vocabulary) can confirm or
reject sentence- and report-level candidates; replies outside the vocabulary
count as rejections.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .corpus import Dataset, Label
from .errors import (
    EmptyCorpus,
    MissingSentenceLabels,
    PatternSetInvalid,
    UnreadablePath,
)
from .lexicon import CATEGORY_ABBRS, POS, Lexicon
from .textproc import ProcessedSentence, process_report


class Level(str, Enum):
    WORD = "Word"
    PHRASE = "Phrase"
    SENTENCE = "Sentence"
    BUG_REPORT = "BugReport"


class Topic(str, Enum):
    LOCK = "Lock"
    THREAD = "Thread"
    RACE = "Race"
    ATOMICITY = "Atomicity"
    SYNC = "Sync"
    OTHER = "Other"


_ID_LEVEL = {"KW": Level.WORD, "PH": Level.PHRASE, "SE": Level.SENTENCE, "BR": Level.BUG_REPORT}


@dataclass(frozen=True)
class Slot:
    """One category requirement: category, POS (None = any admissible), and an
    optional lemma whitelist narrowing the slot."""

    category: str
    pos: Optional[POS] = None
    lemmas: Optional[frozenset] = None

    def key(self) -> tuple:
        return (self.category, self.pos.value if self.pos else "*")

    def __str__(self) -> str:
        s = f"{self.category}:{self.pos.value if self.pos else '*'}"
        if self.lemmas:
            s += "=" + "|".join(sorted(self.lemmas))
        return s


@dataclass(frozen=True)
class WordPattern:
    id: str
    keyword: str  # lemma sequence, space-joined
    category: str  # CBG or CME provenance
    description: str = ""

    @property
    def level(self) -> Level:
        return Level.WORD

    @property
    def lemmas(self) -> tuple[str, ...]:
        return tuple(self.keyword.split(" "))


@dataclass(frozen=True)
class PhraseTemplate:
    id: str
    slots: tuple  # 2 or 3 Slot values (no lemma qualifiers at phrase level)
    max_gap: int = 4
    description: str = ""

    @property
    def level(self) -> Level:
        return Level.PHRASE

    def canonical_slots(self) -> tuple:
        return tuple(sorted(s.key() for s in self.slots))


@dataclass(frozen=True)
class SentenceTemplate:
    id: str
    name: str
    required: tuple  # Slot values, conjunctive
    forbidden: tuple = ()
    topic: Topic = Topic.OTHER
    is_action: bool = False  # action templates skip interrogative sentences
    description: str = ""

    @property
    def level(self) -> Level:
        return Level.SENTENCE


@dataclass(frozen=True)
class BugReportTemplate:
    id: str
    name: str
    contributing_topics: frozenset
    min_sentence_matches: int = 1
    description: str = ""

    @property
    def level(self) -> Level:
        return Level.BUG_REPORT


@dataclass
class PatternSet:
    patterns: list
    version: str = "1"

    def __post_init__(self):
        ids = [p.id for p in self.patterns]
        if len(set(ids)) != len(ids):
            raise PatternSetInvalid("duplicate pattern ids")
        self._by_id = {p.id: p for p in self.patterns}

    def by_level(self, level: Level) -> list:
        return [p for p in self.patterns if p.level == level]

    @property
    def word_patterns(self) -> list:
        return self.by_level(Level.WORD)

    @property
    def phrase_templates(self) -> list:
        return self.by_level(Level.PHRASE)

    @property
    def sentence_templates(self) -> list:
        return self.by_level(Level.SENTENCE)

    @property
    def bug_report_templates(self) -> list:
        return self.by_level(Level.BUG_REPORT)

    def get(self, pattern_id: str):
        return self._by_id[pattern_id]

    def __contains__(self, pattern_id: str) -> bool:
        return pattern_id in self._by_id

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def layout(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.patterns)

    @property
    def layout_hash(self) -> str:
        payload = "|".join(self.layout) + "@" + self.version
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def level_counts(self) -> dict:
        return {lv.value: len(self.by_level(lv)) for lv in Level}


# ---------------------------------------------------------------------------
# Pattern-set file parsing

_ATTR_RE = re.compile(r'(\w+)=("(?:[^"]*)"|\S+)')


def _parse_attrs(text: str) -> dict:
    out = {}
    for key, value in _ATTR_RE.findall(text):
        if value.startswith('"') and value.endswith('"'):
            value = value[1:-1]
        out[key] = value
    return out


def _parse_slot(text: str, allow_lemmas: bool = True) -> Slot:
    text = text.strip()
    m = re.match(r"^([A-Z]+):(\*|[A-Z]+)(?:=(.+))?$", text)
    if not m:
        raise PatternSetInvalid(f"bad slot syntax: {text!r}")
    cat, pos_s, lemmas_s = m.groups()
    if cat not in CATEGORY_ABBRS:
        raise PatternSetInvalid(f"unknown category {cat!r} in slot {text!r}")
    pos = None if pos_s == "*" else POS(pos_s)
    lemmas = None
    if lemmas_s:
        if not allow_lemmas:
            raise PatternSetInvalid(f"lemma qualifier not allowed here: {text!r}")
        lemmas = frozenset(l.strip() for l in lemmas_s.split("|") if l.strip())
    return Slot(cat, pos, lemmas)


def _parse_slot_list(text: str) -> tuple:
    # top-level commas separate slots; lemma alternatives use '|'
    return tuple(_parse_slot(part) for part in text.split(",") if part.strip())


def load_pattern_set(path=None) -> PatternSet:
    """Parse a pattern-set file; defaults to the shipped 58-pattern set."""
    if path is None:
        text = resources.files("lptriage").joinpath("data/pattern_set.txt").read_text("utf-8")
    else:
        path = Path(path)
        if not path.is_file():
            raise UnreadablePath(str(path))
        text = path.read_text(encoding="utf-8")

    patterns: list = []
    version = "1"
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            if line.startswith("# version:"):
                version = line.split(":", 1)[1].strip()
            continue
        if line.startswith("version:"):
            version = line.split(":", 1)[1].strip()
            continue
        m = re.match(r"^\[([A-Z]+\d+)\]\s*(.*)$", line)
        if not m:
            raise PatternSetInvalid(f"line {line_no}: expected [ID] ...")
        pid, rest = m.groups()
        prefix = re.match(r"[A-Z]+", pid).group(0)
        level = _ID_LEVEL.get(prefix)
        if level is None:
            raise PatternSetInvalid(f"line {line_no}: unknown id prefix {prefix!r}")
        attrs = _parse_attrs(rest)
        try:
            if level == Level.WORD:
                patterns.append(
                    WordPattern(
                        id=pid,
                        keyword=attrs["keyword"],
                        category=attrs.get("category", "CBG"),
                        description=attrs.get("example", attrs.get("description", "")),
                    )
                )
            elif level == Level.PHRASE:
                slot_text = rest.split("gap=")[0].split("example=")[0]
                slots = tuple(
                    _parse_slot(part, allow_lemmas=False)
                    for part in slot_text.split("+")
                    if part.strip()
                )
                if len(slots) not in (2, 3):
                    raise PatternSetInvalid(f"{pid}: phrase templates take 2 or 3 slots")
                gap = int(attrs.get("gap", "4"))
                if gap < 0:
                    raise PatternSetInvalid(f"{pid}: gap must be >= 0")
                patterns.append(
                    PhraseTemplate(pid, slots, gap, attrs.get("example", ""))
                )
            elif level == Level.SENTENCE:
                required = _parse_slot_list(attrs["require"])
                if not required:
                    raise PatternSetInvalid(f"{pid}: require= must list at least one slot")
                forbidden = _parse_slot_list(attrs["forbid"]) if "forbid" in attrs else ()
                patterns.append(
                    SentenceTemplate(
                        id=pid,
                        name=attrs["name"],
                        required=required,
                        forbidden=forbidden,
                        topic=Topic(attrs.get("topic", "Other")),
                        is_action=attrs.get("action", "no") in ("yes", "true", "1"),
                        description=attrs.get("example", ""),
                    )
                )
            else:
                topics = frozenset(Topic(t) for t in attrs["topics"].split(",") if t)
                min_matches = int(attrs.get("min_matches", "1"))
                if min_matches < 1:
                    raise PatternSetInvalid(f"{pid}: min_matches must be >= 1")
                patterns.append(
                    BugReportTemplate(
                        id=pid,
                        name=attrs["name"],
                        contributing_topics=topics,
                        min_sentence_matches=min_matches,
                        description=attrs.get("example", ""),
                    )
                )
        except KeyError as exc:
            raise PatternSetInvalid(f"line {line_no}: missing attribute {exc}")
    return PatternSet(patterns, version=version)


# ---------------------------------------------------------------------------
# Hits and match reports

@dataclass(frozen=True)
class Hit:
    pattern_id: str
    sentence_index: int
    span: tuple[int, int]
    neg_dominated: bool = False  # sentence-level only

    def to_record(self) -> dict:
        rec = {"pattern_id": self.pattern_id, "sentence_index": self.sentence_index,
               "span": list(self.span)}
        if self.neg_dominated:
            rec["neg_dominated"] = True
        return rec

    @staticmethod
    def from_record(rec: dict) -> "Hit":
        return Hit(rec["pattern_id"], rec["sentence_index"], tuple(rec["span"]),
                   rec.get("neg_dominated", False))


@dataclass
class MatchReport:
    report_id: str
    word_hits: list
    phrase_hits: list
    sentence_hits: list
    br_hits: list
    pattern_set_hash: str = ""

    @property
    def matched_levels(self) -> frozenset:
        out = set()
        if self.word_hits:
            out.add(Level.WORD)
        if self.phrase_hits:
            out.add(Level.PHRASE)
        if self.sentence_hits:
            out.add(Level.SENTENCE)
        if self.br_hits:
            out.add(Level.BUG_REPORT)
        return frozenset(out)

    def hits_for(self, level: Level) -> list:
        return {
            Level.WORD: self.word_hits,
            Level.PHRASE: self.phrase_hits,
            Level.SENTENCE: self.sentence_hits,
            Level.BUG_REPORT: self.br_hits,
        }[level]

    def matched_ids(self) -> frozenset:
        return frozenset(
            h.pattern_id
            for hits in (self.word_hits, self.phrase_hits, self.sentence_hits, self.br_hits)
            for h in hits
        )

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "pattern_set_hash": self.pattern_set_hash,
            "word_hits": [h.to_record() for h in self.word_hits],
            "phrase_hits": [h.to_record() for h in self.phrase_hits],
            "sentence_hits": [h.to_record() for h in self.sentence_hits],
            "br_hits": [h.to_record() for h in self.br_hits],
        }

    @staticmethod
    def from_record(rec: dict) -> "MatchReport":
        return MatchReport(
            report_id=rec["report_id"],
            word_hits=[Hit.from_record(h) for h in rec["word_hits"]],
            phrase_hits=[Hit.from_record(h) for h in rec["phrase_hits"]],
            sentence_hits=[Hit.from_record(h) for h in rec["sentence_hits"]],
            br_hits=[Hit.from_record(h) for h in rec["br_hits"]],
            pattern_set_hash=rec.get("pattern_set_hash", ""),
        )


def save_match_reports(reports: Iterable[MatchReport], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": "lptriage-matches", "version": 1}) + "\n")
        for r in reports:
            f.write(json.dumps(r.to_record(), ensure_ascii=False) + "\n")


def load_match_reports(path) -> list[MatchReport]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("format") == "lptriage-matches":
                continue
            out.append(MatchReport.from_record(rec))
    return out


# ---------------------------------------------------------------------------
# Adjudicator protocol (implemented by llmbridge; rule mode needs none)

class Adjudicator(Protocol):
    def confirm_sentence(self, sentence_text: str, candidate_names: list[str],
                         all_names: list[str]) -> set:
        """Return the subset of candidate template names confirmed for the
        sentence; anything outside the vocabulary counts as a rejection."""

    def confirm_report(self, report_text: str, evidence_sentences: list[str],
                       br_name: str) -> bool:
        """Root-cause yes/no for one bug-report template."""


# ---------------------------------------------------------------------------
# Sentence-side indexes

class _SentenceIndex:
    """Category/lemma occurrence index for one processed sentence."""

    def __init__(self, sentence: ProcessedSentence, lexicon: Lexicon):
        self.sentence = sentence
        tokens = sentence.tokens
        self.lemmas = [t.lemma for t in tokens]
        self.token_spans = [t.span for t in tokens]
        # (cat, pos) -> sorted token positions; position -> (start_tok, end_tok)
        self.cat_positions: dict[tuple, list[tuple[int, int]]] = {}
        for i, tok in enumerate(tokens):
            for cat in lexicon.categorize(tok.lemma, tok.pos):
                self.cat_positions.setdefault((cat, tok.pos), []).append((i, i + 1))
        for start, end, entry, cat in lexicon.phrase_spans(self.lemmas):
            constraint = lexicon.categories[cat].pos_constraint
            for pos in constraint:
                self.cat_positions.setdefault((cat, pos), []).append((start, end))
        self.neg_positions = sorted(
            {
                pos_range[0]
                for (cat, _p), ranges in self.cat_positions.items()
                if cat == "NEG"
                for pos_range in ranges
            }
        )

    def slot_occurrences(self, slot: Slot, lexicon: Lexicon) -> list[tuple[int, int]]:
        """Token ranges (start, end_exclusive) satisfying the slot."""
        out = []
        poses = [slot.pos] if slot.pos else list(POS)
        for pos in poses:
            for start, end in self.cat_positions.get((slot.category, pos), ()):
                if slot.lemmas is not None:
                    lemma = " ".join(self.lemmas[start:end])
                    if lemma not in slot.lemmas:
                        continue
                out.append((start, end))
        return sorted(set(out))

    def char_span(self, start_tok: int, end_tok: int) -> tuple[int, int]:
        return (self.token_spans[start_tok][0], self.token_spans[end_tok - 1][1])

    def negated(self, position: int) -> bool:
        return any(position - 2 <= n < position for n in self.neg_positions)


def _index(sentences: Sequence[ProcessedSentence], lexicon: Lexicon) -> list[_SentenceIndex]:
    return [_SentenceIndex(s, lexicon) for s in sentences]


# ---------------------------------------------------------------------------
# Level matchers

def _find_lemma_sequence(lemmas: Sequence[str], needle: tuple[str, ...]) -> list[tuple[int, int]]:
    n = len(needle)
    return [
        (i, i + n)
        for i in range(len(lemmas) - n + 1)
        if tuple(lemmas[i:i + n]) == needle
    ]


def match_word_level(
    sentences: Sequence[ProcessedSentence],
    lexicon: Lexicon,
    pattern_set: Optional[PatternSet] = None,
) -> list[Hit]:
    """One hit per occurrence of any keyword pattern's lemma sequence.

    The shipped keyword pool covers every lexicon CBG/CME entry, so this is
    case-insensitive, lemma-based matching of the concurrency keyword sets.
    POS is deliberately ignored: this level is the noisy, high-recall one.
    """
    pattern_set = pattern_set or default_pattern_set()
    hits = []
    for sent in sentences:
        lemmas = sent.lemmas
        spans = [t.span for t in sent.tokens]
        for pat in pattern_set.word_patterns:
            for start, end in _find_lemma_sequence(lemmas, pat.lemmas):
                hits.append(Hit(pat.id, sent.index, (spans[start][0], spans[end - 1][1])))
    return hits


def match_phrase_level(
    sentences: Sequence[ProcessedSentence],
    lexicon: Lexicon,
    pattern_set: PatternSet,
) -> list[Hit]:
    """A hit per (template, sentence) when slots co-occur within the gap,
    in either order."""
    hits = []
    for idx in _index(sentences, lexicon):
        for tpl in pattern_set.phrase_templates:
            occ_lists = [idx.slot_occurrences(s, lexicon) for s in tpl.slots]
            if any(not occ for occ in occ_lists):
                continue
            witness = _phrase_witness(occ_lists, tpl.max_gap)
            if witness is not None:
                lo = min(w[0] for w in witness)
                hi = max(w[1] for w in witness)
                hits.append(Hit(tpl.id, idx.sentence.index, idx.char_span(lo, hi)))
    return hits


def _phrase_witness(occ_lists: list[list[tuple[int, int]]], max_gap: int):
    """Leftmost assignment of one occurrence per slot, pairwise-disjoint, with
    at most max_gap tokens between consecutive matched ranges."""
    best = None

    def ok(assignment: list[tuple[int, int]]) -> bool:
        ranges = sorted(assignment)
        for (s1, e1), (s2, e2) in zip(ranges, ranges[1:]):
            if s2 < e1:  # overlapping token ranges can't witness two slots
                return False
            if s2 - e1 > max_gap:
                return False
        return True

    def rec(i: int, chosen: list):
        nonlocal best
        if best is not None:
            return
        if i == len(occ_lists):
            if ok(chosen):
                best = list(chosen)
            return
        for occ in occ_lists[i]:
            if any(not (occ[1] <= c[0] or c[1] <= occ[0]) for c in chosen):
                continue
            chosen.append(occ)
            rec(i + 1, chosen)
            chosen.pop()
            if best is not None:
                return

    rec(0, [])
    return best


def match_sentence_level(
    sentences: Sequence[ProcessedSentence],
    lexicon: Lexicon,
    pattern_set: PatternSet,
    adjudicator: Optional[Adjudicator] = None,
) -> list[Hit]:
    """Rule mode: required slots all satisfied, no forbidden slot satisfied;
    action templates skip interrogative sentences.  Adjudicator mode filters
    rule-mode candidates through the constrained-name confirmation."""
    all_names = [t.name for t in pattern_set.sentence_templates]
    hits = []
    for idx in _index(sentences, lexicon):
        candidates = []
        for tpl in pattern_set.sentence_templates:
            if tpl.is_action and idx.sentence.is_question:
                continue
            witnesses = []
            satisfied = True
            for slot in tpl.required:
                occ = idx.slot_occurrences(slot, lexicon)
                if not occ:
                    satisfied = False
                    break
                witnesses.append((slot, occ))
            if not satisfied:
                continue
            if any(idx.slot_occurrences(slot, lexicon) for slot in tpl.forbidden):
                continue
            governing = next(
                (w for w in witnesses if w[0].pos == POS.VERB), witnesses[0]
            )
            neg_dominated = all(idx.negated(start) for start, _end in governing[1])
            lo = min(w[1][0][0] for w in witnesses)
            hi = max(w[1][0][1] for w in witnesses)
            candidates.append(
                (tpl, Hit(tpl.id, idx.sentence.index, idx.char_span(lo, hi), neg_dominated))
            )
        if adjudicator is not None and candidates:
            confirmed = adjudicator.confirm_sentence(
                idx.sentence.text, [t.name for t, _ in candidates], all_names
            )
            candidates = [(t, h) for t, h in candidates if t.name in confirmed]
        hits.extend(h for _t, h in candidates)
    return hits


def match_bug_report_level(
    sentence_hits: Sequence[Hit],
    pattern_set: PatternSet,
    adjudicator: Optional[Adjudicator] = None,
    report_text: str = "",
    sentence_texts: Optional[dict] = None,
) -> list[Hit]:
    """Aggregate sentence hits into report-level hits.

    A template fires when at least min_sentence_matches non-NEG-dominated
    sentence hits carry one of its contributing topics.  In adjudicator mode
    the LLM confirms each candidate template root-cause yes/no.
    """
    by_id = {t.id: t for t in pattern_set.sentence_templates}
    hits = []
    for tpl in pattern_set.bug_report_templates:
        contributing = [
            h
            for h in sentence_hits
            if not h.neg_dominated
            and h.pattern_id in by_id
            and by_id[h.pattern_id].topic in tpl.contributing_topics
        ]
        if len(contributing) < tpl.min_sentence_matches:
            continue
        first = min(contributing, key=lambda h: (h.sentence_index, h.span))
        if adjudicator is not None:
            evidence = []
            if sentence_texts:
                evidence = [
                    sentence_texts[h.sentence_index]
                    for h in contributing
                    if h.sentence_index in sentence_texts
                ]
            if not adjudicator.confirm_report(report_text, evidence, tpl.name):
                continue
        hits.append(Hit(tpl.id, first.sentence_index, first.span))
    return hits


def match_report(
    sentences: Sequence[ProcessedSentence],
    lexicon: Lexicon,
    pattern_set: PatternSet,
    adjudicator: Optional[Adjudicator] = None,
    report_text: str = "",
) -> MatchReport:
    """Run all four levels over one report's processed sentences."""
    report_id = sentences[0].report_id if sentences else ""
    sentence_hits = match_sentence_level(sentences, lexicon, pattern_set, adjudicator)
    return MatchReport(
        report_id=report_id,
        word_hits=match_word_level(sentences, lexicon, pattern_set),
        phrase_hits=match_phrase_level(sentences, lexicon, pattern_set),
        sentence_hits=sentence_hits,
        br_hits=match_bug_report_level(
            sentence_hits,
            pattern_set,
            adjudicator,
            report_text=report_text,
            sentence_texts={s.index: s.text for s in sentences},
        ),
        pattern_set_hash=pattern_set.layout_hash,
    )


def match_dataset(
    dataset: Dataset,
    lexicon: Lexicon,
    pattern_set: PatternSet,
    adjudicator: Optional[Adjudicator] = None,
) -> dict:
    """MatchReport per report id."""
    out = {}
    for report in dataset:
        sentences = process_report(report, lexicon)
        out[report.id] = match_report(
            sentences, lexicon, pattern_set, adjudicator, report_text=report.text
        )
    return out


def default_pattern_set() -> PatternSet:
    return load_pattern_set(None)


# ---------------------------------------------------------------------------
# Phrase mining

@dataclass(frozen=True)
class MinedPhrase:
    slots: tuple  # canonical (category, pos-string) pairs
    support: float
    count: int


def _categorized_occurrences(idx: _SentenceIndex) -> list[tuple[int, str, str]]:
    """(position, category, pos) occurrences for mining, one per start token."""
    occ = []
    for (cat, pos), ranges in idx.cat_positions.items():
        for start, _end in ranges:
            occ.append((start, cat, pos.value))
    return sorted(set(occ))


def mine_phrase_candidates(
    sentences: Sequence[ProcessedSentence],
    lexicon: Lexicon,
    n: int,
    min_support: float,
) -> list[MinedPhrase]:
    """Enumerate POS-typed n-gram co-occurrences with a CBG/CME anchor slot.

    Candidates are unordered (category, POS) tuples counted once per sentence
    containing them; support is the fraction of input sentences.
    """
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    sentences = list(sentences)
    if not sentences:
        raise EmptyCorpus("no sentences to mine")
    counts: dict[tuple, int] = {}
    for idx in _index(sentences, lexicon):
        occ = _categorized_occurrences(idx)
        keys = set()
        for combo in _combinations_distinct_positions(occ, n):
            cats = [c for (_p, c, _pos) in combo]
            if not any(c in ("CBG", "CME") for c in cats):
                continue
            key = tuple(sorted((c, pos) for (_p, c, pos) in combo))
            keys.add(key)
        for key in keys:
            counts[key] = counts.get(key, 0) + 1
    total = len(sentences)
    mined = [
        MinedPhrase(slots=key, support=cnt / total, count=cnt)
        for key, cnt in counts.items()
        if cnt / total >= min_support
    ]
    mined.sort(key=lambda m: (-m.support, m.slots))
    return mined


def _combinations_distinct_positions(occ, n):
    m = len(occ)
    if n == 2:
        for i in range(m):
            for j in range(i + 1, m):
                if occ[i][0] != occ[j][0]:
                    yield (occ[i], occ[j])
    else:
        for i in range(m):
            for j in range(i + 1, m):
                if occ[i][0] == occ[j][0]:
                    continue
                for k in range(j + 1, m):
                    if occ[k][0] in (occ[i][0], occ[j][0]):
                        continue
                    yield (occ[i], occ[j], occ[k])


# ---------------------------------------------------------------------------
# Saturation

class SaturationUnit(str, Enum):
    SUBSET_TENTHS = "SubsetTenths"
    BY_PROJECT = "ByProject"


@dataclass
class SaturationPoint:
    iteration: int
    unit_label: str
    accumulated_sentences: int
    word_patterns: int
    phrase_patterns: int
    sentence_patterns: int
    word_recall: float
    phrase_recall: float
    sentence_recall: float


@dataclass
class SaturationCurve:
    points: list
    holdout_size: int
    full_word_recall: float
    full_phrase_recall: float
    full_sentence_recall: float


def _concurrency_sentences(dataset: Dataset, lexicon: Lexicon) -> list[tuple[str, ProcessedSentence]]:
    if not dataset.sentence_labels:
        raise MissingSentenceLabels("dataset carries no sentence labels")
    labeled = {(s.report_id, s.sentence_index): s.is_concurrency_related
               for s in dataset.sentence_labels}
    out = []
    for report in dataset:
        if report.label != Label.CONCURRENCY:
            continue
        for sent in process_report(report, lexicon):
            if labeled.get((report.id, sent.index), False):
                out.append((report.project, sent))
    if not out:
        raise MissingSentenceLabels("no concurrency-labeled sentences found")
    return out


def _recall(sentences, hit_fn) -> float:
    if not sentences:
        return 0.0
    return sum(1 for s in sentences if hit_fn(s)) / len(sentences)


def saturation_curve(
    dataset: Dataset,
    lexicon: Lexicon,
    pattern_set: PatternSet,
    unit: SaturationUnit = SaturationUnit.SUBSET_TENTHS,
    seed: int = 0,
    holdout_fraction: float = 0.2,
    word_threshold: float = 0.05,
    phrase_min_support: float = 0.10,
) -> SaturationCurve:
    """Iterative-extension bookkeeping: accumulate corpus units, re-run
    mining and frequency filtering, and record cumulative distinct pattern
    counts plus held-out recall per level.

    Retention is cumulative (a pattern once retained stays retained), which
    makes both the counts and the recall curves non-decreasing.
    """
    unit = SaturationUnit(unit)
    tagged = _concurrency_sentences(dataset, lexicon)
    rng = random.Random(seed)
    shuffled = tagged[:]
    rng.shuffle(shuffled)
    n_holdout = max(1, int(round(holdout_fraction * len(shuffled))))
    holdout = [s for _p, s in shuffled[:n_holdout]]
    pool = shuffled[n_holdout:]

    if unit == SaturationUnit.SUBSET_TENTHS:
        groups = [(f"subset-{i + 1}", []) for i in range(10)]
        for j, (_proj, sent) in enumerate(pool):
            groups[j % 10][1].append(sent)
    else:
        by_project: dict[str, list] = {}
        for proj, sent in pool:
            if not proj:
                raise MissingSentenceLabels("ByProject saturation needs project tags")
            by_project.setdefault(proj, []).append(sent)
        ordered = sorted(by_project.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        groups = [(name, sents) for name, sents in ordered]

    word_pats = pattern_set.word_patterns
    phrase_tpls = pattern_set.phrase_templates
    sent_tpls = pattern_set.sentence_templates
    canon_to_phrase = {}
    for tpl in phrase_tpls:
        canon_to_phrase.setdefault(tpl.canonical_slots(), []).append(tpl.id)

    def word_hit(sent: ProcessedSentence, active_ids: set) -> bool:
        lemmas = sent.lemmas
        return any(
            _find_lemma_sequence(lemmas, p.lemmas)
            for p in word_pats
            if p.id in active_ids
        )

    def phrase_hit(sent: ProcessedSentence, active_ids: set) -> bool:
        subset = PatternSet(
            [t for t in phrase_tpls if t.id in active_ids], version=pattern_set.version
        ) if active_ids else None
        return bool(subset and match_phrase_level([sent], lexicon, subset))

    def sentence_hit(sent: ProcessedSentence, active_ids: set) -> bool:
        subset = PatternSet(
            [t for t in sent_tpls if t.id in active_ids], version=pattern_set.version
        ) if active_ids else None
        return bool(subset and match_sentence_level([sent], lexicon, subset))

    active_words: set = set()
    active_phrases: set = set()
    active_sentences: set = set()
    accumulated: list[ProcessedSentence] = []
    points = []
    for it, (label, sents) in enumerate(groups, 1):
        accumulated.extend(sents)
        total = len(accumulated)
        if total:
            for pat in word_pats:
                cnt = sum(
                    1 for s in accumulated if _find_lemma_sequence(s.lemmas, pat.lemmas)
                )
                if cnt / total >= word_threshold and cnt > 0:
                    active_words.add(pat.id)
            try:
                mined = mine_phrase_candidates(accumulated, lexicon, 2, phrase_min_support)
                mined += mine_phrase_candidates(accumulated, lexicon, 3, phrase_min_support)
            except EmptyCorpus:
                mined = []
            mined_keys = {m.slots for m in mined}
            for key, ids in canon_to_phrase.items():
                if key in mined_keys:
                    active_phrases.update(ids)
            for tpl in sent_tpls:
                if tpl.id in active_sentences:
                    continue
                single = PatternSet([tpl], version=pattern_set.version)
                if any(match_sentence_level([s], lexicon, single) for s in accumulated):
                    active_sentences.add(tpl.id)
        points.append(
            SaturationPoint(
                iteration=it,
                unit_label=label,
                accumulated_sentences=total,
                word_patterns=len(active_words),
                phrase_patterns=len(active_phrases),
                sentence_patterns=len(active_sentences),
                word_recall=_recall(holdout, lambda s: word_hit(s, active_words)),
                phrase_recall=_recall(holdout, lambda s: phrase_hit(s, active_phrases)),
                sentence_recall=_recall(holdout, lambda s: sentence_hit(s, active_sentences)),
            )
        )

    all_word = {p.id for p in word_pats}
    all_phrase = {t.id for t in phrase_tpls}
    all_sent = {t.id for t in sent_tpls}
    return SaturationCurve(
        points=points,
        holdout_size=len(holdout),
        full_word_recall=_recall(holdout, lambda s: word_hit(s, all_word)),
        full_phrase_recall=_recall(holdout, lambda s: phrase_hit(s, all_phrase)),
        full_sentence_recall=_recall(holdout, lambda s: sentence_hit(s, all_sent)),
    )
