"""Loading, validating, persisting and splitting labeled issue-report datasets.

The canonical on-disk form is line-delimited JSON with a versioned header
record (one issue per line).  GitHub- and Jira-style exports are converted at
ingestion.  Records that fail validation are quarantined into a sidecar file;
a load only fails outright when more than 10% of the records are malformed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import (
    EmptyDataset,
    InsufficientNegatives,
    KExceedsClassCount,
    MissingTimestamp,
    SchemaViolation,
    UnlabeledData,
    UnreadablePath,
)

CORPUS_FORMAT = "lptriage-corpus"
CORPUS_VERSION = 1
SENTENCE_LABEL_FORMAT = "lptriage-sentence-labels"
QUARANTINE_SUFFIX = ".quarantine"
MAX_MALFORMED_FRACTION = 0.10


class Label(str, Enum):
    CONCURRENCY = "Concurrency"
    NON_CONCURRENCY = "NonConcurrency"
    UNLABELED = "Unlabeled"


class Source(str, Enum):
    GITHUB = "GitHub"
    JIRA = "Jira"
    SYNTHETIC = "Synthetic"


class ExportFormat(str, Enum):
    GITHUB_JSON = "GitHubJson"
    JIRA_JSON = "JiraJson"
    JSONL = "Jsonl"


class SplitStrategy(str, Enum):
    RATIO = "Ratio"
    STRATIFIED_KFOLD = "StratifiedKFold"


@dataclass(frozen=True)
class IssueReport:
    """One tracker issue: identifiers, text, label and provenance."""

    id: str
    project: str
    title: str
    body: str
    label: Label
    source: Source
    created_at: Optional[str] = None  # ISO-8601 UTC or None

    def validate(self) -> None:
        if not self.id or not str(self.id).strip():
            raise ValueError("id must be non-empty")
        if not (self.title.strip() or self.body.strip()):
            raise ValueError("title and body are both empty")

    @property
    def text(self) -> str:
        return f"{self.title}\n{self.body}".strip()

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "project": self.project,
            "title": self.title,
            "body": self.body,
            "label": self.label.value,
            "source": self.source.value,
            "created_at": self.created_at,
        }

    @staticmethod
    def from_record(rec: dict) -> "IssueReport":
        try:
            report = IssueReport(
                id=str(rec["id"]),
                project=str(rec.get("project", "")),
                title=str(rec.get("title") or ""),
                body=str(rec.get("body") or ""),
                label=Label(rec.get("label", Label.UNLABELED.value)),
                source=Source(rec.get("source", Source.SYNTHETIC.value)),
                created_at=rec.get("created_at"),
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"bad record: {exc}") from exc
        report.validate()
        return report


@dataclass(frozen=True)
class SentenceLabel:
    """Per-sentence concurrency tag for one report's sentence index."""

    report_id: str
    sentence_index: int
    is_concurrency_related: bool

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "sentence_index": self.sentence_index,
            "is_concurrency_related": self.is_concurrency_related,
        }


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: frozenset
    eval_ids: frozenset
    seed: int
    strategy: SplitStrategy

    def __post_init__(self):
        if self.train_ids & self.eval_ids:
            raise ValueError("train and eval ids overlap")


@dataclass
class Dataset:
    """An ordered, id-unique collection of issue reports.

    Read-only after construction; share freely across threads.
    """

    reports: list[IssueReport] = field(default_factory=list)
    sentence_labels: list[SentenceLabel] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for i, r in enumerate(self.reports):
            if r.id in seen:
                raise SchemaViolation(i, f"duplicate id {r.id!r}")
            seen.add(r.id)
        self._by_id = {r.id: r for r in self.reports}

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def get(self, report_id: str) -> IssueReport:
        return self._by_id[report_id]

    def ids(self) -> list[str]:
        return [r.id for r in self.reports]

    @property
    def fully_labeled(self) -> bool:
        return all(r.label != Label.UNLABELED for r in self.reports)

    def count_label(self, label: Label) -> int:
        return sum(1 for r in self.reports if r.label == label)

    def subset(self, ids: Iterable[str]) -> "Dataset":
        wanted = set(ids)
        reports = [r for r in self.reports if r.id in wanted]
        labels = [s for s in self.sentence_labels if s.report_id in wanted]
        return Dataset(reports, labels)

    def sentence_labels_for(self, report_id: str) -> dict[int, bool]:
        return {
            s.sentence_index: s.is_concurrency_related
            for s in self.sentence_labels
            if s.report_id == report_id
        }


# ---------------------------------------------------------------------------
# Ingestion

def _convert_github(raw, positive_labels: frozenset) -> Iterable[dict]:
    if not isinstance(raw, list):
        raise ValueError("GitHub export must be a JSON array of issues")
    for item in raw:
        names = [
            (l.get("name", "") if isinstance(l, dict) else str(l)).lower()
            for l in item.get("labels", []) or []
        ]
        if any(n in positive_labels for n in names):
            label = Label.CONCURRENCY
        elif names:
            label = Label.NON_CONCURRENCY
        else:
            label = Label.UNLABELED
        yield {
            "id": str(item.get("number", item.get("id", ""))),
            "project": str(item.get("project", item.get("repository", ""))),
            "title": item.get("title") or "",
            "body": item.get("body") or "",
            "label": label.value,
            "source": Source.GITHUB.value,
            "created_at": item.get("created_at"),
        }


def _convert_jira(raw) -> Iterable[dict]:
    issues = raw.get("issues") if isinstance(raw, dict) else raw
    if not isinstance(issues, list):
        raise ValueError("Jira export must be a JSON array or have an 'issues' array")
    for item in issues:
        fields = item.get("fields", {}) or {}
        yield {
            "id": str(item.get("key", "")),
            "project": str(item.get("key", "")).split("-")[0],
            "title": fields.get("summary") or "",
            "body": fields.get("description") or "",
            "label": Label.UNLABELED.value,
            "source": Source.JIRA.value,
            "created_at": fields.get("created"),
        }


def _read_jsonl_records(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                rec = {"_parse_error": str(exc), "_raw": line.rstrip("\n")}
            records.append(rec)
    if records and records[0].get("format") == CORPUS_FORMAT:
        records = records[1:]  # header record
    return records


def load_dataset(
    path,
    format: ExportFormat = ExportFormat.JSONL,
    positive_labels: Iterable[str] = ("concurrency",),
    quarantine: bool = True,
) -> Dataset:
    """Load and validate a dataset, quarantining malformed records.

    Raises SchemaViolation when more than 10% of records are malformed,
    EmptyDataset when no record survives.
    """
    path = Path(path)
    if not path.is_file():
        raise UnreadablePath(str(path))
    format = ExportFormat(format)

    if format == ExportFormat.JSONL:
        raw_records = _read_jsonl_records(path)
    else:
        try:
            with open(path, encoding="utf-8") as f:
                raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(0, f"not valid JSON: {exc}")
        if format == ExportFormat.GITHUB_JSON:
            raw_records = list(_convert_github(raw, frozenset(p.lower() for p in positive_labels)))
        else:
            raw_records = list(_convert_jira(raw))

    reports: list[IssueReport] = []
    bad: list[tuple[int, str, dict]] = []
    seen_ids: set[str] = set()
    for idx, rec in enumerate(raw_records):
        if "_parse_error" in rec:
            bad.append((idx, rec["_parse_error"], {"raw": rec.get("_raw", "")}))
            continue
        try:
            report = IssueReport.from_record(rec)
            if report.id in seen_ids:
                raise ValueError(f"duplicate id {report.id!r}")
            seen_ids.add(report.id)
        except ValueError as exc:
            bad.append((idx, str(exc), rec))
            continue
        reports.append(report)

    if bad and quarantine:
        qpath = path.with_name(path.name + QUARANTINE_SUFFIX)
        with open(qpath, "w", encoding="utf-8") as f:
            for idx, reason, rec in bad:
                f.write(json.dumps({"index": idx, "reason": reason, "record": rec}) + "\n")

    total = len(raw_records)
    if total == 0:
        raise EmptyDataset(str(path))
    if len(bad) / total > MAX_MALFORMED_FRACTION:
        idx, reason, _ = bad[0]
        raise SchemaViolation(idx, f"{reason} ({len(bad)} of {total} records malformed)")
    if not reports:
        raise EmptyDataset(str(path))
    return Dataset(reports)


def save_dataset(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": CORPUS_FORMAT, "version": CORPUS_VERSION}) + "\n")
        for r in dataset.reports:
            f.write(json.dumps(r.to_record(), ensure_ascii=False) + "\n")


def load_sentence_labels(path, dataset: Optional[Dataset] = None) -> list[SentenceLabel]:
    path = Path(path)
    if not path.is_file():
        raise UnreadablePath(str(path))
    labels = []
    with open(path, encoding="utf-8") as f:
        for idx, line in enumerate(f):
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("format") == SENTENCE_LABEL_FORMAT:
                continue
            label = SentenceLabel(
                report_id=str(rec["report_id"]),
                sentence_index=int(rec["sentence_index"]),
                is_concurrency_related=bool(rec["is_concurrency_related"]),
            )
            if dataset is not None and label.report_id not in dataset._by_id:
                raise SchemaViolation(idx, f"unknown report_id {label.report_id!r}")
            labels.append(label)
    return labels


def save_sentence_labels(labels: Iterable[SentenceLabel], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": SENTENCE_LABEL_FORMAT, "version": 1}) + "\n")
        for s in labels:
            f.write(json.dumps(s.to_record()) + "\n")


# ---------------------------------------------------------------------------
# Splitting and rebalancing

def _require_labeled(dataset: Dataset) -> None:
    for r in dataset.reports:
        if r.label == Label.UNLABELED:
            raise UnlabeledData(f"report {r.id!r} is Unlabeled")


def _class_ids(dataset: Dataset) -> tuple[list[str], list[str]]:
    pos = [r.id for r in dataset.reports if r.label == Label.CONCURRENCY]
    neg = [r.id for r in dataset.reports if r.label == Label.NON_CONCURRENCY]
    return pos, neg


def split_dataset(dataset: Dataset, strategy: SplitStrategy, ratio_or_k, seed: int):
    """Deterministic stratified split.

    Ratio: returns one DatasetSplit with ~ratio of each class in train.
    StratifiedKFold: returns k DatasetSplits (eval_ids = fold members);
    per-fold positive counts differ by at most one.
    """
    strategy = SplitStrategy(strategy)
    _require_labeled(dataset)
    pos, neg = _class_ids(dataset)
    rng = random.Random(seed)

    if strategy == SplitStrategy.RATIO:
        ratio = float(ratio_or_k)
        if not 0 < ratio < 1:
            raise ValueError(f"ratio must be in (0,1), got {ratio}")
        train: set[str] = set()
        for ids in (pos, neg):
            shuffled = ids[:]
            rng.shuffle(shuffled)
            n_train = int(round(ratio * len(shuffled)))
            train.update(shuffled[:n_train])
        eval_ids = frozenset(set(dataset.ids()) - train)
        return DatasetSplit(frozenset(train), eval_ids, seed, strategy)

    k = int(ratio_or_k)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > len(pos) + len(neg):
        raise KExceedsClassCount(f"k={k} exceeds dataset size {len(dataset)}")
    folds: list[set[str]] = [set() for _ in range(k)]
    for ids in (pos, neg):
        shuffled = ids[:]
        rng.shuffle(shuffled)
        for i, rid in enumerate(shuffled):
            folds[i % k].add(rid)
    all_ids = set(dataset.ids())
    return [
        DatasetSplit(frozenset(all_ids - fold), frozenset(fold), seed, strategy)
        for fold in folds
    ]


def downsample_to_prevalence(dataset: Dataset, positive_fraction: float, seed: int) -> Dataset:
    """Keep every positive, sample negatives down to the target prevalence."""
    if not 0 < positive_fraction <= 1:
        raise ValueError(f"positive_fraction must be in (0,1], got {positive_fraction}")
    _require_labeled(dataset)
    pos, neg = _class_ids(dataset)
    target_neg = int(round(len(pos) * (1 - positive_fraction) / positive_fraction))
    if target_neg > len(neg):
        raise InsufficientNegatives(
            f"need {target_neg} negatives for prevalence {positive_fraction}, have {len(neg)}"
        )
    rng = random.Random(seed)
    kept_neg = set(rng.sample(neg, target_neg))
    keep = set(pos) | kept_neg
    return dataset.subset(keep)


def filter_created_after(dataset: Dataset, cutoff_iso: str) -> Dataset:
    """Post-cutoff construction; refuses records with null timestamps."""
    for r in dataset.reports:
        if r.created_at is None:
            raise MissingTimestamp(f"report {r.id!r} has no created_at timestamp")
    keep = [r.id for r in dataset.reports if r.created_at > cutoff_iso]
    return dataset.subset(keep)
