import json

import pytest

from lptriage.corpus import (
    Dataset,
    DatasetSplit,
    ExportFormat,
    IssueReport,
    Label,
    SentenceLabel,
    Source,
    SplitStrategy,
    downsample_to_prevalence,
    filter_created_after,
    load_dataset,
    load_sentence_labels,
    save_dataset,
    save_sentence_labels,
    split_dataset,
)
from lptriage.errors import (
    EmptyDataset,
    InsufficientNegatives,
    MissingTimestamp,
    SchemaViolation,
    UnlabeledData,
    UnreadablePath,
)


def make_report(i, label=Label.NON_CONCURRENCY, created=None):
    return IssueReport(f"R{i}", "proj", f"Title {i}", f"Body {i}.", label, Source.SYNTHETIC, created)


def make_dataset(n_pos, n_neg):
    reports = [make_report(i, Label.CONCURRENCY) for i in range(n_pos)]
    reports += [make_report(n_pos + i) for i in range(n_neg)]
    return Dataset(reports)


def write_jsonl(path, records, header=True):
    with open(path, "w") as f:
        if header:
            f.write(json.dumps({"format": "lptriage-corpus", "version": 1}) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def test_load_three_valid_records(tmp_path):
    path = tmp_path / "ds.jsonl"
    write_jsonl(path, [make_report(i).to_record() for i in range(3)])
    ds = load_dataset(path)
    assert len(ds) == 3
    assert ds.get("R1").title == "Title 1"


def test_empty_id_is_schema_violation_at_index_zero(tmp_path):
    path = tmp_path / "bad.jsonl"
    rec = make_report(0).to_record()
    rec["id"] = ""
    write_jsonl(path, [rec])
    with pytest.raises(SchemaViolation) as err:
        load_dataset(path)
    assert err.value.record_index == 0


def test_quarantine_sidecar_and_ten_percent_rule(tmp_path):
    path = tmp_path / "dirty.jsonl"
    records = [make_report(i).to_record() for i in range(20)]
    records[5] = {"id": "", "title": "", "body": ""}  # 1/20 = 5% malformed: loads
    write_jsonl(path, records)
    ds = load_dataset(path)
    assert len(ds) == 19
    sidecar = tmp_path / "dirty.jsonl.quarantine"
    assert sidecar.exists()
    quarantined = [json.loads(l) for l in sidecar.read_text().splitlines()]
    assert quarantined[0]["index"] == 5


def test_more_than_ten_percent_malformed_fails(tmp_path):
    path = tmp_path / "dirty.jsonl"
    records = [make_report(i).to_record() for i in range(10)]
    for i in (2, 5):
        records[i] = {"id": "", "title": "x", "body": "y"}
    write_jsonl(path, records)
    with pytest.raises(SchemaViolation):
        load_dataset(path)


def test_unreadable_path():
    with pytest.raises(UnreadablePath):
        load_dataset("/nonexistent/nowhere.jsonl")


def test_empty_file_is_empty_dataset(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(EmptyDataset):
        load_dataset(path)


def test_github_export_conversion(tmp_path):
    path = tmp_path / "gh.json"
    path.write_text(json.dumps([
        {"number": 7, "title": "Deadlock in pool", "body": "Hangs.",
         "labels": [{"name": "concurrency"}], "created_at": "2023-01-01T00:00:00Z"},
        {"number": 8, "title": "Typo", "body": "Fix docs.", "labels": [{"name": "docs"}]},
        {"number": 9, "title": "No labels", "body": "Plain."},
    ]))
    ds = load_dataset(path, ExportFormat.GITHUB_JSON)
    assert ds.get("7").label == Label.CONCURRENCY
    assert ds.get("8").label == Label.NON_CONCURRENCY
    assert ds.get("9").label == Label.UNLABELED
    assert ds.get("7").source == Source.GITHUB


def test_jira_export_conversion(tmp_path):
    path = tmp_path / "jira.json"
    path.write_text(json.dumps({"issues": [
        {"key": "HAD-123", "fields": {"summary": "Stuck job",
                                      "description": "The job is stuck.",
                                      "created": "2022-03-04T00:00:00Z"}},
    ]}))
    ds = load_dataset(path, ExportFormat.JIRA_JSON)
    report = ds.get("HAD-123")
    assert report.project == "HAD"
    assert report.title == "Stuck job"
    assert report.source == Source.JIRA


def test_roundtrip_is_field_identical(tmp_path):
    ds = make_dataset(3, 5)
    path = tmp_path / "rt.jsonl"
    save_dataset(ds, path)
    again = load_dataset(path)
    assert [r.to_record() for r in again] == [r.to_record() for r in ds]


def test_sentence_label_roundtrip(tmp_path):
    ds = make_dataset(1, 1)
    labels = [SentenceLabel("R0", 0, True), SentenceLabel("R0", 1, False)]
    path = tmp_path / "labels.jsonl"
    save_sentence_labels(labels, path)
    assert load_sentence_labels(path, ds) == labels
    bad = [SentenceLabel("NOPE", 0, True)]
    save_sentence_labels(bad, path)
    with pytest.raises(SchemaViolation):
        load_sentence_labels(path, ds)


def test_ratio_split_deterministic():
    ds = make_dataset(5, 5)
    split = split_dataset(ds, SplitStrategy.RATIO, 0.8, seed=7)
    assert len(split.train_ids) == 8 and len(split.eval_ids) == 2
    again = split_dataset(ds, SplitStrategy.RATIO, 0.8, seed=7)
    assert split.train_ids == again.train_ids and split.eval_ids == again.eval_ids
    assert not (split.train_ids & split.eval_ids)
    assert split.train_ids | split.eval_ids == set(ds.ids())


def test_stratified_kfold_membership():
    # 20 reports, 4 positive, k=10: every fold holds 0 or 1 positive and
    # every report lands in exactly one eval fold (checked by enumeration).
    ds = make_dataset(4, 16)
    folds = split_dataset(ds, SplitStrategy.STRATIFIED_KFOLD, 10, seed=3)
    assert len(folds) == 10
    seen = []
    for fold in folds:
        pos_in_fold = sum(1 for rid in fold.eval_ids if ds.get(rid).label == Label.CONCURRENCY)
        assert pos_in_fold in (0, 1)
        seen.extend(fold.eval_ids)
        assert fold.train_ids | fold.eval_ids == set(ds.ids())
    assert sorted(seen) == sorted(ds.ids())


def test_fold_positive_counts_differ_by_at_most_one():
    ds = make_dataset(15, 285)
    folds = split_dataset(ds, SplitStrategy.STRATIFIED_KFOLD, 10, seed=1)
    counts = [
        sum(1 for rid in f.eval_ids if ds.get(rid).label == Label.CONCURRENCY) for f in folds
    ]
    assert max(counts) - min(counts) <= 1


def test_split_rejects_unlabeled():
    ds = Dataset([make_report(0, Label.UNLABELED), make_report(1, Label.CONCURRENCY)])
    with pytest.raises(UnlabeledData):
        split_dataset(ds, SplitStrategy.RATIO, 0.8, seed=0)


def test_split_disjointness_enforced():
    with pytest.raises(ValueError):
        DatasetSplit(frozenset({"a"}), frozenset({"a"}), 0, SplitStrategy.RATIO)


def test_downsample_reaches_paper_prevalence():
    ds = make_dataset(182, 10000)
    smaller = downsample_to_prevalence(ds, 0.05, seed=11)
    assert smaller.count_label(Label.CONCURRENCY) == 182
    assert smaller.count_label(Label.NON_CONCURRENCY) == 3458
    # every positive preserved
    pos_ids = {r.id for r in ds if r.label == Label.CONCURRENCY}
    assert pos_ids <= set(smaller.ids())


def test_downsample_noop_when_at_target():
    ds = make_dataset(10, 10)
    same = downsample_to_prevalence(ds, 0.5, seed=0)
    assert same.ids() == ds.ids()


def test_downsample_insufficient_negatives():
    ds = make_dataset(10, 5)
    with pytest.raises(InsufficientNegatives):
        downsample_to_prevalence(ds, 0.05, seed=0)


def test_downsample_deterministic():
    ds = make_dataset(20, 400)
    a = downsample_to_prevalence(ds, 0.10, seed=5)
    b = downsample_to_prevalence(ds, 0.10, seed=5)
    assert a.ids() == b.ids()


def test_filter_created_after_refuses_null_timestamps():
    ds = Dataset([make_report(0, created="2024-01-01T00:00:00Z"), make_report(1)])
    with pytest.raises(MissingTimestamp):
        filter_created_after(ds, "2023-10-01T00:00:00Z")
    ds2 = Dataset([
        make_report(0, created="2024-01-01T00:00:00Z"),
        make_report(1, created="2022-01-01T00:00:00Z"),
    ])
    kept = filter_created_after(ds2, "2023-10-01T00:00:00Z")
    assert kept.ids() == ["R0"]
