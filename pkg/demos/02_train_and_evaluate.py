#!/usr/bin/env python3
"""Walkthrough: pattern feature vectors, training, and the evaluation harness.

Run from the repository root: python3 demos/02_train_and_evaluate.py
"""

from lptriage.classify import ModelKind, RebalanceMethod, rebalance, train, vectorize
from lptriage.corpus import load_dataset, load_sentence_labels
from lptriage.evaluation import (
    MethodConfig,
    ReportFormat,
    cross_validate,
    level_sweep,
    render_report,
)
from lptriage.lexicon import load_lexicon
from lptriage.patterns import Level, SaturationUnit, load_pattern_set, match_dataset, saturation_curve

lexicon = load_lexicon()
patterns = load_pattern_set()
dataset = load_dataset("src/lptriage/data/mini_corpus.jsonl")
dataset.sentence_labels = load_sentence_labels(
    "src/lptriage/data/mini_corpus_sentence_labels.jsonl", dataset
)

matches = match_dataset(dataset, lexicon, patterns)

# matching-based classification, one row per level
sweep = level_sweep(dataset, list(Level), lexicon, patterns, matches=matches)
print(render_report(sweep, ReportFormat.PLAIN))

# binary feature vectors feed the built-in linear classifiers
vectors = [vectorize(matches[r.id], patterns) for r in dataset]
labels = [r.label for r in dataset]
print(f"feature vectors: {len(vectors)} x {len(vectors[0].bits)} bits")

balanced_v, balanced_l = rebalance(vectors, labels, RebalanceMethod.RANDOM_OVERSAMPLE,
                                   target_ratio=1.0, seed=7)
model = train(ModelKind.LOGISTIC_REGRESSION, balanced_v, balanced_l, seed=7)
print(f"trained LR on the rebalanced set, final loss {model.final_loss:.4f}\n")

# stratified 10-fold cross-validation of LR on all pattern levels
config = MethodConfig(method="learning", kind=ModelKind.LOGISTIC_REGRESSION)
cv = cross_validate(dataset, 10, config, seed=7, lexicon=lexicon,
                    pattern_set=patterns, matches=matches)
micro = next(r for r in cv.rows if r.fold == "micro")
print(f"LR(ALL) 10-fold micro: P={micro.precision:.2f} R={micro.recall:.2f} "
      f"F={micro.f_measure:.2f}")
word_f = sweep.rows[0].f_measure
print(f"word-level matching F={word_f:.2f}  ->  learning beats matching: "
      f"{micro.f_measure > word_f}\n")

# saturation: accumulate tenths of the labeled sentences, re-derive patterns,
# watch held-out recall grow and flatten
curve = saturation_curve(dataset, lexicon, patterns, SaturationUnit.SUBSET_TENTHS, seed=3)
print("saturation (word/phrase/sentence recall on held-out sentences):")
for point in curve.points:
    print(f"  iter {point.iteration:2d}: patterns=({point.word_patterns:2d},"
          f"{point.phrase_patterns:2d},{point.sentence_patterns:2d}) "
          f"recall=({point.word_recall:.2f},{point.phrase_recall:.2f},"
          f"{point.sentence_recall:.2f})")
print(f"  full set: ({curve.full_word_recall:.2f},{curve.full_phrase_recall:.2f},"
      f"{curve.full_sentence_recall:.2f})")
