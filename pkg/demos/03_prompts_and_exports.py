#!/usr/bin/env python3
"""Walkthrough: pattern-guided prompts, transcript replay, fine-tune export.

Run from the repository root: python3 demos/03_prompts_and_exports.py
"""

import tempfile
from pathlib import Path

from lptriage.corpus import load_dataset
from lptriage.evaluation import ReportFormat, evaluate_prompt_method, render_report
from lptriage.lexicon import load_lexicon
from lptriage.llmbridge import (
    EndpointConfig,
    Transcript,
    build_prompt,
    export_finetune_file,
    parse_verdict,
    read_finetune_file,
)
from lptriage.patterns import load_pattern_set, match_dataset

lexicon = load_lexicon()
patterns = load_pattern_set()
fixtures = load_dataset("src/lptriage/data/fixtures_motivating.jsonl")

# --- few-shot prompt construction -------------------------------------------

bundle = build_prompt(patterns, fixtures.get("FIX-LOCK-SCREEN"),
                      exemplar_count=1, seed=4)
print("rendered prompt:")
print(bundle.rendered)
print()

# the verdict parser is deliberately strict
for raw in ("Yes", "No, this is a configuration problem.", "It might involve threads"):
    print(f"  {raw!r:45s} -> {parse_verdict(raw).value}")
print()

# --- transcript record/replay ------------------------------------------------
# record canned responses once, then every later evaluation replays them
# deterministically with zero network traffic

with tempfile.TemporaryDirectory() as tmp:
    transcript_path = Path(tmp) / "transcript.jsonl"
    transcript = Transcript(transcript_path)
    canned = {"FIX-KEYWORD-FREE": "Yes", "FIX-QUESTION": "No", "FIX-LOCK-SCREEN": "No"}
    for report in fixtures:
        b = build_prompt(patterns, report, exemplar_count=1, seed=4)
        transcript.append(b.prompt_hash, b.rendered, canned[report.id])

    endpoint = EndpointConfig(transcript_path=str(transcript_path), replay_only=True)
    report = evaluate_prompt_method(fixtures, patterns, endpoint,
                                    exemplar_count=1, seed=4)
    print(render_report(report, ReportFormat.PLAIN))

    # --- fine-tune export -----------------------------------------------------
    matches = match_dataset(fixtures, lexicon, patterns)
    export_path = Path(tmp) / "finetune.jsonl"
    count = export_finetune_file(fixtures, matches, patterns, export_path,
                                 lexicon=lexicon)
    print(f"exported {count} records; first record text:")
    text, label = read_finetune_file(export_path)[0]
    print(f"  label={label} text={text[:140]}...")
