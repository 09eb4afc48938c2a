"""The ten word-category sets used by every matching level.

The lexicon file is a plain line-oriented format meant to be hand-edited:

    [CBG] pos=NOUN expected=10
    deadlock
    race condition      # multi-word entries are space-joined lemma sequences
    ...

Entries are lowercase lemmas except in the API/EXC categories, where
identifiers keep their case.  A lemma may live in several categories only
when their POS constraints do not overlap (e.g. "lock" is a CME noun and a
POP verb).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import DuplicateEntryConflict, MissingCategory, UnreadablePath, ZeroCorpus

log = logging.getLogger(__name__)


class POS(str, Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    API = "API"
    OTHER = "OTHER"


CATEGORY_ABBRS = ("CBG", "CME", "CTR", "POP", "PSY", "AOT", "SYB", "API", "EXC", "NEG")

# Identifier-valued categories keep entry case.
IDENTIFIER_CATEGORIES = frozenset({"API", "EXC"})


@dataclass(frozen=True)
class WordCategory:
    abbr: str
    pos_constraint: frozenset
    entries: frozenset
    expected_count: Optional[int] = None

    def admits(self, pos: POS) -> bool:
        return pos in self.pos_constraint


@dataclass
class Lexicon:
    categories: dict[str, WordCategory]
    version: str = "1"
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        # single-word index: lemma -> {abbr}, phrase index: first word -> [(words, abbr)]
        self._single: dict[str, set[str]] = {}
        self._phrases: dict[str, list[tuple[tuple[str, ...], str]]] = {}
        for cat in self.categories.values():
            for entry in cat.entries:
                words = tuple(entry.split(" "))
                if len(words) == 1:
                    self._single.setdefault(entry, set()).add(cat.abbr)
                else:
                    self._phrases.setdefault(words[0], []).append((words, cat.abbr))

    def category(self, abbr: str) -> WordCategory:
        return self.categories[abbr]

    def categorize(self, lemma: str, pos: POS) -> frozenset:
        """Categories whose entries contain the lemma and whose POS constraint
        admits the given tag.  Pure lookup; empty set when nothing matches."""
        out = set()
        for abbr in self._single.get(lemma, ()):
            if self.categories[abbr].admits(pos):
                out.add(abbr)
        return frozenset(out)

    def known_lemma(self, lemma: str) -> bool:
        return lemma in self._single

    def pos_union(self, lemma: str) -> frozenset:
        """Union of POS constraints over every category holding the lemma."""
        out = set()
        for abbr in self._single.get(lemma, ()):
            out |= self.categories[abbr].pos_constraint
        return frozenset(out)

    def phrase_spans(self, lemmas: Sequence[str]) -> list[tuple[int, int, str, str]]:
        """Multi-word entry occurrences over a lemma sequence.

        Returns (start_token, end_token_exclusive, entry, category_abbr).
        """
        hits = []
        for i, lemma in enumerate(lemmas):
            for words, abbr in self._phrases.get(lemma, ()):
                n = len(words)
                if tuple(lemmas[i:i + n]) == words:
                    hits.append((i, i + n, " ".join(words), abbr))
        return hits

    def entries(self, *abbrs: str) -> frozenset:
        out = set()
        for abbr in abbrs:
            out |= self.categories[abbr].entries
        return frozenset(out)


def _parse_header(line: str, line_no: int) -> tuple[str, frozenset, Optional[int]]:
    head, _, rest = line.partition("]")
    abbr = head.lstrip("[").strip()
    pos_set: set[POS] = set()
    expected = None
    for tok in rest.split():
        key, _, value = tok.partition("=")
        if key == "pos":
            pos_set = {POS(p.strip()) for p in value.split(",")}
        elif key == "expected":
            expected = int(value)
    if not pos_set:
        raise DuplicateEntryConflict(f"line {line_no}: category {abbr} missing pos= constraint")
    return abbr, frozenset(pos_set), expected


def load_lexicon(path=None) -> Lexicon:
    """Parse and validate a lexicon file; defaults to the shipped one.

    Count mismatches against expected= are warnings, not errors.
    """
    if path is None:
        path = resources.files("lptriage").joinpath("data/lexicon.txt")
        text = path.read_text(encoding="utf-8")
    else:
        path = Path(path)
        if not path.is_file():
            raise UnreadablePath(str(path))
        text = path.read_text(encoding="utf-8")

    version = "1"
    categories: dict[str, WordCategory] = {}
    current: Optional[tuple[str, frozenset, Optional[int]]] = None
    entries: list[str] = []
    warnings: list[str] = []

    def flush():
        nonlocal current, entries
        if current is None:
            return
        abbr, pos_set, expected = current
        if abbr in categories:
            raise DuplicateEntryConflict(f"category {abbr} defined twice")
        seen = set()
        for e in entries:
            if e in seen:
                raise DuplicateEntryConflict(f"entry {e!r} listed twice in {abbr}")
            seen.add(e)
        if expected is not None and len(entries) != expected:
            msg = f"category {abbr} has {len(entries)} entries, expected {expected}"
            warnings.append(msg)
            log.warning(msg)
        categories[abbr] = WordCategory(abbr, pos_set, frozenset(entries), expected)
        current, entries = None, []

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip() if not raw.lstrip().startswith("#") else ""
        if raw.lstrip().startswith("#") or not line.strip():
            if raw.lstrip().startswith("# version:"):
                version = raw.split(":", 1)[1].strip()
            continue
        if line.lstrip().startswith("version:"):
            version = line.split(":", 1)[1].strip()
            continue
        if line.lstrip().startswith("["):
            flush()
            current = _parse_header(line.strip(), line_no)
            continue
        if current is None:
            raise DuplicateEntryConflict(f"line {line_no}: entry outside any category section")
        entry = line.strip()
        if current[0] not in IDENTIFIER_CATEGORIES:
            entry = entry.lower()
        entries.append(entry)
    flush()

    missing = [a for a in CATEGORY_ABBRS if a not in categories]
    if missing:
        raise MissingCategory(", ".join(missing))

    # Cross-category conflicts: same entry in two categories with overlapping POS.
    by_entry: dict[str, list[str]] = {}
    for cat in categories.values():
        for e in cat.entries:
            by_entry.setdefault(e, []).append(cat.abbr)
    for entry, abbrs in by_entry.items():
        for i in range(len(abbrs)):
            for j in range(i + 1, len(abbrs)):
                a, b = categories[abbrs[i]], categories[abbrs[j]]
                if a.pos_constraint & b.pos_constraint:
                    raise DuplicateEntryConflict(
                        f"entry {entry!r} appears in {a.abbr} and {b.abbr} "
                        f"with overlapping POS constraints"
                    )

    return Lexicon(categories, version=version, warnings=warnings)


def frequency_filter(
    candidate_entries: Iterable[tuple[str, int]],
    corpus_sentence_count: int,
    threshold: float,
) -> list[tuple[str, int]]:
    """Retain entries whose sentence frequency reaches the threshold."""
    if corpus_sentence_count == 0:
        raise ZeroCorpus("corpus_sentence_count is 0")
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    retained = []
    for lemma, count in candidate_entries:
        if count < 0:
            raise ValueError(f"negative count for {lemma!r}")
        if count / corpus_sentence_count >= threshold:
            retained.append((lemma, count))
    return retained
