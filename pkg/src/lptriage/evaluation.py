"""Precision/recall/F-measure scoring, cross-validation, level sweeps, and
table rendering.

Report serialization is canonical: everything except wall-clock runtime, so
reruns with the same seed produce byte-identical artifacts.  Runtime and
input hashes go into the sidecar manifest instead.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .classify import (
    Classification,
    FeatureVector,
    ModelKind,
    RebalanceMethod,
    classify_by_matching,
    predict,
    rebalance,
    train,
    vectorize,
)
from .corpus import Dataset, Label, SplitStrategy, split_dataset
from .errors import IdMismatch, UsageError
from .lexicon import Lexicon
from .llmbridge import EndpointConfig, Verdict, build_prompt, query
from .patterns import Level, PatternSet, match_dataset

COMBO_LABELS = {
    Level.WORD: "KW",
    Level.PHRASE: "PH",
    Level.SENTENCE: "SE",
    Level.BUG_REPORT: "BR",
}
ALL_LEVELS = (Level.WORD, Level.PHRASE, Level.SENTENCE, Level.BUG_REPORT)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def metrics(counts: ConfusionCounts) -> tuple[float, float, float]:
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return p, r, f_measure(p, r)


def score(predictions: dict, gold: dict) -> tuple[ConfusionCounts, float, float, float]:
    """predictions/gold map report id -> Label; id sets must align."""
    if set(predictions) != set(gold):
        missing = set(gold) - set(predictions)
        extra = set(predictions) - set(gold)
        raise IdMismatch(f"missing={sorted(missing)[:5]} extra={sorted(extra)[:5]}")
    counts = ConfusionCounts()
    tp = fp = tn = fn = 0
    for rid, predicted in predictions.items():
        actual = gold[rid]
        if predicted == Label.CONCURRENCY:
            if actual == Label.CONCURRENCY:
                tp += 1
            else:
                fp += 1
        else:
            if actual == Label.CONCURRENCY:
                fn += 1
            else:
                tn += 1
    counts = ConfusionCounts(tp, fp, tn, fn)
    p, r, f = metrics(counts)
    return counts, p, r, f


@dataclass
class EvalRow:
    method: str
    combination: str
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    tn: int
    fn: int
    fold: Optional[str] = None  # per-fold rows, or "micro"/"macro"

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "combination": self.combination,
            "fold": self.fold,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
        }


@dataclass
class EvalReport:
    experiment_id: str
    rows: list
    dataset_descriptor: str
    seed: int
    runtime: float = 0.0  # excluded from canonical serialization

    def canonical_record(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "dataset": self.dataset_descriptor,
            "seed": self.seed,
            "rows": [r.to_record() for r in self.rows],
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.canonical_record(), sort_keys=True).encode("utf-8")


def _row_from_counts(method, combination, counts, fold=None) -> EvalRow:
    p, r, f = metrics(counts)
    return EvalRow(method, combination, p, r, f, counts.tp, counts.fp, counts.tn, counts.fn, fold)


def dataset_descriptor(dataset: Dataset) -> str:
    pos = dataset.count_label(Label.CONCURRENCY)
    return f"{len(dataset)} reports ({pos} positive)"


def dataset_hash(dataset: Dataset) -> str:
    h = hashlib.sha256()
    for report in dataset:
        h.update(json.dumps(report.to_record(), sort_keys=True).encode("utf-8"))
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Method configuration

@dataclass
class MethodConfig:
    """What to run: matching at a level, or a learned model over combinations."""

    method: str = "matching"  # matching | learning | prompt
    level: Level = Level.BUG_REPORT  # matching only
    kind: ModelKind = ModelKind.LOGISTIC_REGRESSION  # learning only
    combination: tuple = ALL_LEVELS  # learning: which levels' bits to use
    rebalance: RebalanceMethod = RebalanceMethod.NONE
    hyperparameters: Optional[dict] = None
    exemplar_count: int = 1  # prompt only
    endpoint: Optional[EndpointConfig] = None  # prompt only

    @property
    def name(self) -> str:
        if self.method == "matching":
            return f"Match({self.level.value})"
        if self.method == "prompt":
            return "Prompt"
        return self.kind.value

    @property
    def combination_label(self) -> str:
        combo = tuple(self.combination)
        if combo == ALL_LEVELS:
            return "ALL"
        return "+".join(COMBO_LABELS[Level(l)] for l in combo)


def _mask_vector(v: FeatureVector, pattern_set: PatternSet, combination) -> FeatureVector:
    levels = {Level(l) for l in combination}
    bits = tuple(
        bit if pattern_set.get(pid).level in levels else 0
        for pid, bit in zip(pattern_set.layout, v.bits)
    )
    return FeatureVector(v.report_id, bits, v.layout_hash)


def gold_labels(dataset: Dataset) -> dict:
    return {r.id: r.label for r in dataset}


# ---------------------------------------------------------------------------
# Experiments

def level_sweep(
    dataset: Dataset,
    levels: Sequence[Level],
    lexicon: Lexicon,
    pattern_set: PatternSet,
    matches: Optional[dict] = None,
    experiment_id: str = "level-sweep",
) -> EvalReport:
    """Matching-based classification, one row per requested level; all rows
    share the identical pipeline except the swept level."""
    start = time.time()
    gold = gold_labels(dataset)
    if matches is None:
        matches = match_dataset(dataset, lexicon, pattern_set)
    rows = []
    for level in levels:
        level = Level(level)
        predictions = {
            rid: classify_by_matching(matches[rid], level).predicted for rid in gold
        }
        counts, _, _, _ = score(predictions, gold)
        rows.append(_row_from_counts(f"Match({level.value})", COMBO_LABELS[level], counts))
    return EvalReport(experiment_id, rows, dataset_descriptor(dataset), seed=0,
                      runtime=time.time() - start)


def cross_validate(
    dataset: Dataset,
    k: int,
    config: MethodConfig,
    seed: int,
    lexicon: Lexicon,
    pattern_set: PatternSet,
    matches: Optional[dict] = None,
    experiment_id: str = "cross-validation",
) -> EvalReport:
    """Stratified k-fold evaluation reporting per-fold, micro and macro rows."""
    start = time.time()
    folds = split_dataset(dataset, SplitStrategy.STRATIFIED_KFOLD, k, seed)
    gold = gold_labels(dataset)
    if matches is None:
        matches = match_dataset(dataset, lexicon, pattern_set)
    vectors = {rid: vectorize(matches[rid], pattern_set) for rid in gold}
    if config.method == "learning":
        vectors = {
            rid: _mask_vector(v, pattern_set, config.combination)
            for rid, v in vectors.items()
        }

    rows = []
    total = ConfusionCounts()
    fold_metrics = []
    for i, fold in enumerate(folds):
        eval_ids = sorted(fold.eval_ids)
        if config.method == "matching":
            predictions = {
                rid: classify_by_matching(matches[rid], config.level).predicted
                for rid in eval_ids
            }
        elif config.method == "learning":
            train_ids = sorted(fold.train_ids)
            train_vecs = [vectors[rid] for rid in train_ids]
            train_labels = [gold[rid] for rid in train_ids]
            if config.rebalance != RebalanceMethod.NONE:
                train_vecs, train_labels = rebalance(
                    train_vecs, train_labels, config.rebalance, seed=seed
                )
            model = train(config.kind, train_vecs, train_labels,
                          config.hyperparameters, seed=seed)
            predictions = {rid: predict(model, vectors[rid]).predicted for rid in eval_ids}
        else:
            raise UsageError(f"cross_validate does not support method {config.method!r}")
        counts, p, r, f = score(predictions, {rid: gold[rid] for rid in eval_ids})
        total = total + counts
        fold_metrics.append((p, r, f))
        rows.append(
            _row_from_counts(config.name, config.combination_label, counts, fold=str(i))
        )
    rows.append(_row_from_counts(config.name, config.combination_label, total, fold="micro"))
    n = len(fold_metrics)
    rows.append(
        EvalRow(
            config.name,
            config.combination_label,
            sum(m[0] for m in fold_metrics) / n,
            sum(m[1] for m in fold_metrics) / n,
            sum(m[2] for m in fold_metrics) / n,
            total.tp, total.fp, total.tn, total.fn,
            fold="macro",
        )
    )
    return EvalReport(experiment_id, rows, dataset_descriptor(dataset), seed,
                      runtime=time.time() - start)


def evaluate_predictor(
    dataset: Dataset,
    predict_fn,
    lexicon: Lexicon,
    pattern_set: PatternSet,
    matches: Optional[dict] = None,
    name: str = "Custom",
    experiment_id: str = "custom-eval",
) -> EvalReport:
    """Plug-in point for external classifiers: predict_fn takes a
    FeatureVector and returns a Label; scoring conventions are shared."""
    start = time.time()
    gold = gold_labels(dataset)
    if matches is None:
        matches = match_dataset(dataset, lexicon, pattern_set)
    predictions = {
        rid: predict_fn(vectorize(matches[rid], pattern_set)) for rid in gold
    }
    counts, _, _, _ = score(predictions, gold)
    rows = [_row_from_counts(name, "ALL", counts)]
    return EvalReport(experiment_id, rows, dataset_descriptor(dataset), seed=0,
                      runtime=time.time() - start)


def evaluate_prompt_method(
    dataset: Dataset,
    pattern_set: PatternSet,
    endpoint: EndpointConfig,
    exemplar_count=1,
    seed: int = 0,
    experiment_id: str = "prompt-eval",
) -> EvalReport:
    """Classify every report through the LLM bridge and score the verdicts.

    With a transcript in replay mode this is fully deterministic and
    network-free."""
    start = time.time()
    gold = gold_labels(dataset)
    predictions = {}
    for report in dataset:
        bundle = build_prompt(pattern_set, report, exemplar_count=exemplar_count, seed=seed)
        response = query(endpoint, bundle)
        predictions[report.id] = (
            Label.CONCURRENCY if response.verdict == Verdict.YES else Label.NON_CONCURRENCY
        )
    counts, _, _, _ = score(predictions, gold)
    label = "ALL" if exemplar_count else "None"
    rows = [_row_from_counts("Prompt", label, counts)]
    return EvalReport(experiment_id, rows, dataset_descriptor(dataset), seed,
                      runtime=time.time() - start)


# ---------------------------------------------------------------------------
# Rendering

class ReportFormat(str, Enum):
    PLAIN = "PlainTable"
    CSV = "Csv"
    MARKDOWN = "MarkdownTable"


_CSV_COLUMNS = ("method", "combination", "fold", "precision", "recall", "f_measure",
                "tp", "fp", "tn", "fn")


def render_report(report: EvalReport, format: ReportFormat = ReportFormat.PLAIN) -> str:
    """Stable column order; 2-decimal display in tables, full precision in
    Csv.  Rounding is display-only and never feeds back into stored metrics."""
    format = ReportFormat(format)
    if format == ReportFormat.CSV:
        lines = [",".join(_CSV_COLUMNS)]
        for row in report.rows:
            rec = row.to_record()
            cells = []
            for col in _CSV_COLUMNS:
                value = rec[col]
                if isinstance(value, float):
                    cells.append(repr(value))
                elif value is None:
                    cells.append("")
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    headers = ("Method", "Combination", "Fold", "Precision", "Recall", "F-Measure")
    table = [
        (
            row.method,
            row.combination,
            row.fold or "",
            f"{row.precision:.2f}",
            f"{row.recall:.2f}",
            f"{row.f_measure:.2f}",
        )
        for row in report.rows
    ]
    if format == ReportFormat.MARKDOWN:
        lines = ["| " + " | ".join(headers) + " |",
                 "|" + "|".join(" --- " for _ in headers) + "|"]
        for cells in table:
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    widths = [max(len(h), *(len(row[i]) for row in table)) if table else len(h)
              for i, h in enumerate(headers)]
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(cells) for cells in table)
    return "\n".join(lines) + "\n"


def parse_csv_report(text: str) -> list[dict]:
    lines = [l for l in text.splitlines() if l.strip()]
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        rec = dict(zip(header, cells))
        for key in ("precision", "recall", "f_measure"):
            rec[key] = float(rec[key])
        for key in ("tp", "fp", "tn", "fn"):
            rec[key] = int(rec[key])
        out.append(rec)
    return out


def save_report(
    report: EvalReport,
    path,
    format: ReportFormat = ReportFormat.CSV,
    inputs: Optional[dict] = None,
) -> None:
    """Write the rendered report plus a sidecar manifest with the seed,
    config hash, input hashes and runtime."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report, format), encoding="utf-8")
    manifest = {
        "experiment_id": report.experiment_id,
        "dataset": report.dataset_descriptor,
        "seed": report.seed,
        "runtime_seconds": report.runtime,
        "report_sha256": hashlib.sha256(report.canonical_bytes()).hexdigest(),
        "inputs": inputs or {},
        "version": __version__,
    }
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
