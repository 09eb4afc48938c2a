"""Per-sentence preprocessing: segmentation, tokenization, lemmas, POS, entities.

Each report becomes a list of ProcessedSentence values carrying the sentence
text plus the POS-categorized lemma sets (verbs, nouns, adverbs/adjectives)
and recognized software entities.  The tagger is lexicon-first: category
membership dictates POS for covered words, with a lightweight context rule
for noun/verb ambiguity (preceding determiner or adjective favors NOUN,
preceding "to"/auxiliary/subject pronoun favors VERB, default NOUN).
Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from .corpus import IssueReport
from .lexicon import POS, Lexicon

WORD_RE = re.compile(r"[A-Za-z0-9_]+(?:[.'\-][A-Za-z0-9_]+)*(?:\(\))?")

FENCED_CODE_RE = re.compile(r"```.*?```|~~~.*?~~~", re.DOTALL)
INDENTED_CODE_RE = re.compile(r"(?:^(?:    |\t).*\n?)+", re.MULTILINE)

DETERMINERS = frozenset(
    "the a an this that these those my our your its his her their each every some any no another "
    "one two three four five six seven eight nine ten several multiple many few both all more most".split()
)
AUX_SURFACES = frozenset(
    "is are was were be been being am has have had do does did will would can "
    "could may might must should shall cannot 's".split()
)
AUX_LEMMAS = frozenset("be have do will can may must shall".split())
SUBJECT_PRONOUNS = frozenset("i we you he she it they who".split())
# Adverbs that may sit between an auxiliary and its verb ("is never released").
TRANSPARENT_ADVERBS = frozenset(
    "not n't never also always still just often sometimes usually already again".split()
)
# Closed-class adverbs without the -ly giveaway.
ADV_WORDS = frozenset(
    "no not n't never again forever already always sometimes often twice cannot "
    "soon yet too also meanwhile once seldom rarely everywhere nowhere somewhat".split()
)
ADJ_SUFFIXES = ("ous", "ful", "less", "ible", "able", "ish", "ive", "al", "ic", "ed")
NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ism", "ure", "ship", "age")
VERB_SUFFIXES = ("ize", "ise", "ify", "ate")

ABBREVIATIONS = frozenset("e.g i.e etc vs cf fig eg ie mr mrs dr st approx resp".split())


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: POS
    span: tuple[int, int]  # character offsets into the sentence


@dataclass(frozen=True)
class ProcessedSentence:
    report_id: str
    index: int
    text: str
    tokens: tuple[Token, ...]

    @property
    def verb_set(self) -> frozenset:
        return frozenset(t.lemma for t in self.tokens if t.pos == POS.VERB)

    @property
    def noun_set(self) -> frozenset:
        return frozenset(t.lemma for t in self.tokens if t.pos == POS.NOUN)

    @property
    def adv_adj_set(self) -> frozenset:
        return frozenset(t.lemma for t in self.tokens if t.pos in (POS.ADV, POS.ADJ))

    @property
    def api_set(self) -> frozenset:
        return frozenset(t.lemma for t in self.tokens if t.pos == POS.API)

    @property
    def lemmas(self) -> tuple[str, ...]:
        return tuple(t.lemma for t in self.tokens)

    @property
    def is_question(self) -> bool:
        return self.text.rstrip().endswith("?")

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "index": self.index,
            "text": self.text,
            "tokens": [
                {"surface": t.surface, "lemma": t.lemma, "pos": t.pos.value, "span": list(t.span)}
                for t in self.tokens
            ],
        }


# ---------------------------------------------------------------------------
# Lemmatizer

@lru_cache(maxsize=1)
def _lemma_exceptions() -> dict:
    text = resources.files("lptriage").joinpath("data/lemma_exceptions.txt").read_text("utf-8")
    table = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        word, lemma = line.split()
        table[word] = lemma
    return table


def lemmatize(word: str, known: frozenset = frozenset()) -> str:
    """Rule-based suffix stripping backed by an irregulars table.

    `known` is the lemma vocabulary (normally the lexicon's) used to pick
    between ambiguous stripping candidates.
    """
    w = word.lower()
    if w in known:
        return w
    exceptions = _lemma_exceptions()
    if w in exceptions:
        return exceptions[w]

    candidates: list[str] = []
    default: Optional[str] = None
    if w.endswith("ies") and len(w) > 4:
        default = w[:-3] + "y"
        candidates = [default]
    elif len(w) > 4 and (w.endswith("sses") or w.endswith("shes") or w.endswith("ches")
                         or w.endswith("xes") or w.endswith("zes")):
        default = w[:-2]
        candidates = [default, w[:-1]]  # crashes -> crash, freezes -> freeze
    elif w.endswith("s") and len(w) > 3 and not w.endswith(("ss", "us", "is")):
        default = w[:-1]
        candidates = [default]
    elif w.endswith("ied") and len(w) > 4:
        default = w[:-3] + "y"
        candidates = [default]
    elif w.endswith("ed") and len(w) > 3:
        stem = w[:-2]
        candidates = [w[:-1], stem]
        default = stem
        if len(stem) > 2 and stem[-1] == stem[-2]:
            candidates.append(stem[:-1])
            default = stem[:-1]
    elif w.endswith("ing") and len(w) > 4:
        stem = w[:-3]
        candidates = [stem, stem + "e"]
        default = stem
        if len(stem) > 2 and stem[-1] == stem[-2]:
            candidates.append(stem[:-1])
            default = stem[:-1]

    for c in candidates:
        if c in known or c in exceptions:
            return exceptions.get(c, c)
    return default if default is not None else w


# ---------------------------------------------------------------------------
# Software-entity recognition

_VERSIONISH_RE = re.compile(r"^v?\d+(\.\d+)*$")


def _is_api_surface(surface: str) -> bool:
    if surface.endswith("()"):
        return True
    if surface.endswith("Exception") or surface.endswith("Error"):
        return surface[0].isupper()
    if "." in surface:
        if _VERSIONISH_RE.match(surface):
            return False
        parts = surface.split(".")
        if all(len(p) >= 2 and not p.isdigit() for p in parts):
            return True
        return False
    # CamelCase: interior uppercase, but not an all-caps acronym
    if (
        len(surface) > 1
        and surface[0].isalpha()
        and any(c.isupper() for c in surface[1:])
        and any(c.islower() for c in surface)
    ):
        return True
    return False


def recognize_software_entities(sentence: str) -> list[Token]:
    """Tokens flagged as code entities (methods, classes, paths, exceptions)."""
    return [
        Token(surface=s, lemma=s, pos=POS.API, span=span)
        for s, span in _raw_tokens(sentence)
        if _is_api_surface(s)
    ]


# ---------------------------------------------------------------------------
# Tokenization and tagging

def _raw_tokens(sentence: str) -> list[tuple[str, tuple[int, int]]]:
    """Word tokens with spans; splits n't and 's clitics into their own tokens."""
    out = []
    for m in WORD_RE.finditer(sentence):
        surface, start, end = m.group(0), m.start(), m.end()
        low = surface.lower()
        if low.endswith("n't") and len(surface) > 3:
            out.append((surface[:-3], (start, end - 3)))
            out.append((surface[-3:], (end - 3, end)))
        elif low.endswith("'s") and len(surface) > 2:
            out.append((surface[:-2], (start, end - 2)))
            out.append((surface[-2:], (end - 2, end)))
        else:
            out.append((surface, (start, end)))
    return out


def _suffix_pos(surface: str, lemma: str) -> POS:
    low = surface.lower()
    if low.endswith("ly") and len(low) > 3:
        return POS.ADV
    if low in ADV_WORDS:
        return POS.ADV
    for suf in NOUN_SUFFIXES:
        if low.endswith(suf) and len(low) > len(suf) + 1:
            return POS.NOUN
    for suf in VERB_SUFFIXES:
        if low.endswith(suf) and len(low) > len(suf) + 1:
            return POS.VERB
    if low.endswith(("ing", "ed")) and lemma != low:
        return POS.VERB
    for suf in ADJ_SUFFIXES:
        if low.endswith(suf) and len(low) > len(suf) + 1:
            return POS.ADJ
    return POS.OTHER


def _adv_or_adj(lemma: str) -> POS:
    if lemma.endswith("ly") or lemma in ADV_WORDS:
        return POS.ADV
    return POS.ADJ


FUNCTION_WORDS = frozenset(
    "on in at by with between over after before during for to of from under and or "
    "but nor so than as if when while because until unless though that which".split()
)


def _verb_y(surface: str) -> bool:
    low = surface.lower()
    if low in AUX_SURFACES:
        return True
    return low.endswith(("ed", "ing")) or (
        low.endswith("s") and len(low) > 3 and not low.endswith("ss")
    )


def _attributive_position(next_surface: Optional[str]) -> bool:
    """A content word follows, so the current word can modify it."""
    if not next_surface:
        return False
    low = next_surface.lower()
    return low.isalpha() and low not in FUNCTION_WORDS and not _verb_y(next_surface)


def _context_hint(prev_tokens: list[Token], noun_chain: bool = False) -> Optional[POS]:
    """NOUN when a determiner/adjective precedes, VERB after to/aux/pronoun.

    With noun_chain, also walk back through a compound of nominal tokens
    ("the counter update") looking for the determiner.
    """
    idx = len(prev_tokens) - 1
    skips = 0
    while idx >= 0 and skips < 2:
        tok = prev_tokens[idx]
        low = tok.surface.lower()
        if low in TRANSPARENT_ADVERBS or tok.lemma in TRANSPARENT_ADVERBS:
            idx -= 1
            skips += 1
            continue
        if low in DETERMINERS or tok.pos == POS.ADJ:
            return POS.NOUN
        if (low in ("to", "please") or low in AUX_SURFACES
                or tok.lemma in AUX_LEMMAS or low in SUBJECT_PRONOUNS):
            return POS.VERB
        break
    if noun_chain:
        steps = 0
        while idx >= 0 and steps < 3:
            tok = prev_tokens[idx]
            low = tok.surface.lower()
            if low in DETERMINERS:
                return POS.NOUN
            if tok.pos not in (POS.NOUN, POS.ADJ, POS.API, POS.OTHER) or _verb_y(tok.surface):
                break
            idx -= 1
            steps += 1
    return None


def _choose_pos(
    lemma: str,
    surface: str,
    constraint: frozenset,
    prev: list[Token],
    next_surface: Optional[str] = None,
) -> POS:
    nounish = POS.NOUN in constraint
    verbish = POS.VERB in constraint
    if nounish or verbish:
        inflected = lemma != surface.lower()
        hint = _context_hint(prev, noun_chain=not inflected)
        if hint == POS.NOUN:
            # determiner/adjective context demotes even VERB-only lexicon words
            # ("the update", "a process"); categorize() then yields nothing.
            if nounish and not verbish and POS.ADJ in constraint:
                # attributive position: "the synchronized block", "a flaky test";
                # nominal morphology ("synchronization", "atomicity") stays NOUN
                if _suffix_pos(surface, lemma) != POS.NOUN and _attributive_position(next_surface):
                    return POS.ADJ
            return POS.NOUN
        if hint == POS.VERB:
            if verbish:
                return POS.VERB
            if POS.ADJ in constraint:  # predicate position: "is atomic"
                return POS.ADJ
        # inflected form after a nominal subject reads as its verb ("the app crashes")
        if (
            verbish
            and inflected
            and prev
            and prev[-1].pos in (POS.NOUN, POS.API, POS.OTHER)
        ):
            return POS.VERB
        if nounish and verbish:
            return POS.NOUN
        if verbish:
            return POS.VERB
        if POS.ADJ in constraint and _suffix_pos(surface, lemma) == POS.ADJ:
            return POS.ADJ
        return POS.NOUN
    if constraint <= {POS.ADV, POS.ADJ} and constraint:
        return _adv_or_adj(lemma)
    return _suffix_pos(surface, lemma)


def tag_tokens(sentence: str, lexicon: Lexicon) -> list[Token]:
    """One token per word; entity recognition first, then lexicon-first POS."""
    known = frozenset(lexicon._single.keys())
    tokens: list[Token] = []
    raw = _raw_tokens(sentence)
    for i, (surface, span) in enumerate(raw):
        next_surface = raw[i + 1][0] if i + 1 < len(raw) else None
        if _is_api_surface(surface):
            tokens.append(Token(surface, surface, POS.API, span))
            continue
        lemma = lemmatize(surface, known)
        constraint = lexicon.pos_union(lemma)
        if constraint:
            pos = _choose_pos(lemma, surface, constraint, tokens, next_surface)
        else:
            hint = _context_hint(tokens) if _suffix_pos(surface, lemma) == POS.OTHER else None
            pos = _suffix_pos(surface, lemma)
            if pos == POS.OTHER and hint == POS.VERB and lemma != surface.lower():
                pos = POS.VERB
        tokens.append(Token(surface, lemma, pos, span))
    return tokens


# ---------------------------------------------------------------------------
# Sentence segmentation

def strip_code(body: str) -> str:
    """Remove fenced and 4-space-indented code blocks, keep inline-code text."""
    text = FENCED_CODE_RE.sub("\n", body)
    text = INDENTED_CODE_RE.sub("\n", text)
    return text.replace("`", "")


def _split_paragraph(par: str) -> list[str]:
    text = " ".join(par.split())
    if not text:
        return []
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            j = i
            while j + 1 < n and text[j + 1] in ".!?":
                j += 1
            # boundary only when whitespace + capital letter follows
            if j + 2 < n and text[j + 1] == " " and text[j + 2].isupper():
                prev = text[start:i]
                last_word = prev.rsplit(None, 1)[-1].lower() if prev.split() else ""
                if ch == "." and last_word in ABBREVIATIONS:
                    i = j + 1
                    continue
                sentences.append(text[start:j + 1].strip())
                start = j + 1
                i = j + 1
                continue
            i = j + 1
            continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def segment_sentences(title: str, body: str) -> list[str]:
    """Title is always sentence 0; code blocks in the body are excluded."""
    sentences: list[str] = []
    title = " ".join(title.split())
    if title:
        sentences.append(title)
    for par in strip_code(body or "").split("\n\n"):
        # single newlines inside a paragraph behave as soft wraps
        sentences.extend(_split_paragraph(par.replace("\n", " ")))
    return sentences


def process_report(report: IssueReport, lexicon: Lexicon) -> list[ProcessedSentence]:
    out = []
    for idx, text in enumerate(segment_sentences(report.title, report.body)):
        out.append(
            ProcessedSentence(
                report_id=report.id,
                index=idx,
                text=text,
                tokens=tuple(tag_tokens(text, lexicon)),
            )
        )
    return out


def dump_processed(sentences: Iterable[ProcessedSentence], path) -> None:
    """Debug dump in the canonical line-delimited format (for oracle diffing)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": "lptriage-processed", "version": 1}) + "\n")
        for s in sentences:
            f.write(json.dumps(s.to_record(), ensure_ascii=False) + "\n")
