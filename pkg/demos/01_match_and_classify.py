#!/usr/bin/env python3
"""Walkthrough: from raw issue text to a four-level classification.

Run from the repository root: python3 demos/01_match_and_classify.py
"""

from lptriage.classify import classify_by_matching
from lptriage.corpus import IssueReport, Label, Source, load_dataset
from lptriage.lexicon import load_lexicon
from lptriage.patterns import Level, load_pattern_set, match_report
from lptriage.textproc import process_report

lexicon = load_lexicon()
patterns = load_pattern_set()

# --- one report through the whole pipeline ---------------------------------

report = IssueReport(
    id="DEMO-1",
    project="demo",
    title="Deadlock when two writers flush at once",
    body=(
        "The system hangs when it tries to acquire the lock. "
        "Both worker threads wait on each other forever.\n\n"
        "```java\nwriteLock.lock();  // never returns\n```\n"
        "Restarting the service clears it for a few hours."
    ),
    label=Label.UNLABELED,
    source=Source.SYNTHETIC,
)

sentences = process_report(report, lexicon)
print("sentences after segmentation (code blocks are dropped):")
for s in sentences:
    print(f"  [{s.index}] {s.text}")
    print(f"      nouns={sorted(s.noun_set)} verbs={sorted(s.verb_set)}")

mr = match_report(sentences, lexicon, patterns, report_text=report.text)
print("\nhits per level:")
for level in Level:
    hits = mr.hits_for(level)
    print(f"  {level.value:10s} {[h.pattern_id for h in hits]}")

print("\nclassification per level (positive iff the level matched):")
for level in Level:
    c = classify_by_matching(mr, level)
    print(f"  {level.value:10s} -> {c.predicted.value}")

# --- the bundled motivating fixtures ----------------------------------------
# a lock-screen report trips the word level but not the report level, and a
# keyword-free race report slips past the word level entirely

fixtures = load_dataset("src/lptriage/data/fixtures_motivating.jsonl")
print("\nmotivating fixtures:")
for fixture in fixtures:
    sents = process_report(fixture, lexicon)
    fmr = match_report(sents, lexicon, patterns, report_text=fixture.text)
    word = classify_by_matching(fmr, Level.WORD).predicted.value
    br = classify_by_matching(fmr, Level.BUG_REPORT).predicted.value
    print(f"  {fixture.id:18s} gold={fixture.label.value:15s} word={word:15s} report={br}")
