"""Single entry point exposing the pipeline as composable subcommands.

Settings resolve as flags > config file > defaults; the config file is the
stock INI shape (sections of key = value).  Every run writes a manifest next
to its outputs.  Exit codes: 0 success, 2 usage error, 3 data error,
4 endpoint error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

from . import __version__
from .classify import (
    ModelKind,
    classify_by_matching,
    load_model,
    predict,
    save_model,
    train,
    vectorize,
)
from .corpus import (
    Dataset,
    ExportFormat,
    Label,
    SplitStrategy,
    downsample_to_prevalence,
    load_dataset,
    load_sentence_labels,
    save_dataset,
    split_dataset,
)
from .errors import DataError, EndpointError, LptriageError, UsageError
from .evaluation import (
    MethodConfig,
    ReportFormat,
    cross_validate,
    dataset_hash,
    evaluate_prompt_method,
    level_sweep,
    render_report,
    save_report,
)
from .lexicon import load_lexicon
from .llmbridge import (
    EndpointConfig,
    build_prompt,
    export_finetune_file,
    query,
)
from .manifest import write_manifest
from .patterns import (
    Level,
    SaturationUnit,
    load_match_reports,
    load_pattern_set,
    match_dataset,
    match_report,
    mine_phrase_candidates,
    saturation_curve,
    save_match_reports,
)
from .textproc import dump_processed, process_report

LEVEL_ALIASES = {
    "word": Level.WORD, "kw": Level.WORD,
    "phrase": Level.PHRASE, "ph": Level.PHRASE,
    "sentence": Level.SENTENCE, "se": Level.SENTENCE,
    "br": Level.BUG_REPORT, "bugreport": Level.BUG_REPORT, "bug-report": Level.BUG_REPORT,
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ENDPOINT = 4


def _parse_level(name: str) -> Level:
    try:
        return LEVEL_ALIASES[name.strip().lower()]
    except KeyError:
        raise UsageError(f"unknown level {name!r}; use word,phrase,sentence,br")


class Settings:
    """flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.file: dict = {}
        config_path = self.args.get("config")
        if config_path:
            if not Path(config_path).is_file():
                raise UsageError(f"config file not found: {config_path}")
            parser = configparser.ConfigParser()
            parser.read(config_path)
            for section in parser.sections():
                for key, value in parser.items(section):
                    self.file[f"{section}.{key}"] = value
                    self.file.setdefault(key, value)

    def get(self, key: str, default=None, cast=None):
        value = self.args.get(key.replace(".", "_"))
        if value is None:
            value = self.file.get(key, default)
        if value is None:
            return None
        return cast(value) if cast else value

    def require(self, key: str, cast=None):
        value = self.get(key, cast=cast)
        if value is None:
            raise UsageError(f"missing required setting {key!r} (flag --{key} or config entry)")
        return value

    def resolved(self) -> dict:
        merged = dict(self.file)
        merged.update({k: v for k, v in self.args.items() if v is not None and k != "func"})
        return {k: str(v) for k, v in merged.items()}


def _load_inputs(settings: Settings, need_dataset=True):
    lexicon_path = settings.get("lexicon")
    patterns_path = settings.get("patterns")
    # config validation: referenced files must exist before any work starts
    for field, value in (("lexicon", lexicon_path), ("patterns", patterns_path)):
        if value and not Path(value).is_file():
            raise UsageError(f"{field}: file not found: {value}")
    lexicon = load_lexicon(lexicon_path)
    pattern_set = load_pattern_set(patterns_path)
    dataset = None
    if need_dataset:
        dataset_path = settings.require("dataset")
        dataset = load_dataset(dataset_path, ExportFormat(settings.get("format", "Jsonl")))
        labels_path = settings.get("sentence_labels")
        if labels_path:
            dataset.sentence_labels = load_sentence_labels(labels_path, dataset)
    return lexicon, pattern_set, dataset


def _out_dir(settings: Settings) -> Path:
    out = Path(settings.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _endpoint_from_settings(settings: Settings) -> EndpointConfig:
    return EndpointConfig(
        url=settings.get("llm_url", "") or "",
        api_key=settings.get("llm_key") or os.environ.get("LPTRIAGE_LLM_KEY", ""),
        model=settings.get("llm_model", "") or "",
        transcript_path=settings.get("transcript"),
        replay_only=bool(settings.get("replay", False)),
    )


# ---------------------------------------------------------------------------
# Subcommands

def cmd_ingest(settings: Settings) -> int:
    src = settings.require("input")
    fmt = ExportFormat(settings.get("format", "GitHubJson"))
    dataset = load_dataset(src, fmt)
    out = _out_dir(settings)
    target = out / "dataset.jsonl"
    save_dataset(dataset, target)
    write_manifest(out, "ingest", settings.resolved(), [src], [target])
    print(f"ingested {len(dataset)} reports -> {target}")
    return EXIT_OK


def cmd_split(settings: Settings) -> int:
    _, _, dataset = _load_inputs(settings)
    strategy = SplitStrategy(settings.get("strategy", "Ratio"))
    seed = int(settings.require("seed"))
    out = _out_dir(settings)
    if strategy == SplitStrategy.RATIO:
        split = split_dataset(dataset, strategy, float(settings.get("ratio", 0.8)), seed)
        payload = [{"train_ids": sorted(split.train_ids), "eval_ids": sorted(split.eval_ids)}]
    else:
        folds = split_dataset(dataset, strategy, int(settings.get("k", 10)), seed)
        payload = [
            {"fold": i, "train_ids": sorted(f.train_ids), "eval_ids": sorted(f.eval_ids)}
            for i, f in enumerate(folds)
        ]
    target = out / "split.json"
    target.write_text(json.dumps({"strategy": strategy.value, "seed": seed, "splits": payload},
                                 indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "split", settings.resolved(), [settings.get("dataset")], [target])
    print(f"wrote {target}")
    return EXIT_OK


def cmd_downsample(settings: Settings) -> int:
    _, _, dataset = _load_inputs(settings)
    fraction = float(settings.get("positive_fraction", 0.05))
    seed = int(settings.require("seed"))
    smaller = downsample_to_prevalence(dataset, fraction, seed)
    out = _out_dir(settings)
    target = out / "dataset.jsonl"
    save_dataset(smaller, target)
    write_manifest(out, "downsample", settings.resolved(), [settings.get("dataset")], [target])
    print(f"downsampled to {len(smaller)} reports -> {target}")
    return EXIT_OK


def cmd_preprocess(settings: Settings) -> int:
    lexicon, _, dataset = _load_inputs(settings)
    out = _out_dir(settings)
    target = out / "processed.jsonl"
    sentences = []
    for report in dataset:
        sentences.extend(process_report(report, lexicon))
    dump_processed(sentences, target)
    write_manifest(out, "preprocess", settings.resolved(), [settings.get("dataset")], [target])
    print(f"wrote {len(sentences)} sentences -> {target}")
    return EXIT_OK


def _match_all(dataset, lexicon, pattern_set, jobs: int):
    if jobs <= 1:
        return match_dataset(dataset, lexicon, pattern_set)
    from concurrent.futures import ProcessPoolExecutor

    reports = list(dataset)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = pool.map(_match_one, [(r, lexicon, pattern_set) for r in reports])
    return {r.id: mr for r, mr in zip(reports, results)}


def _match_one(payload):
    report, lexicon, pattern_set = payload
    sentences = process_report(report, lexicon)
    return match_report(sentences, lexicon, pattern_set, report_text=report.text)


def cmd_match(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    jobs = int(settings.get("jobs", 1))
    matches = _match_all(dataset, lexicon, pattern_set, jobs)
    out = _out_dir(settings)
    target = out / "matches.jsonl"
    save_match_reports([matches[r.id] for r in dataset], target)
    write_manifest(out, "match", settings.resolved(), [settings.get("dataset")], [target])
    print(f"matched {len(matches)} reports -> {target}")
    return EXIT_OK


def cmd_mine(settings: Settings) -> int:
    lexicon, _, dataset = _load_inputs(settings)
    if not dataset.sentence_labels:
        raise DataError("mine needs --sentence-labels")
    labeled = {(s.report_id, s.sentence_index) for s in dataset.sentence_labels
               if s.is_concurrency_related}
    sentences = []
    for report in dataset:
        for sent in process_report(report, lexicon):
            if (report.id, sent.index) in labeled:
                sentences.append(sent)
    n = int(settings.get("n", 2))
    min_support = float(settings.get("min_support", 0.10))
    mined = mine_phrase_candidates(sentences, lexicon, n, min_support)
    out = _out_dir(settings)
    target = out / "mined.json"
    target.write_text(
        json.dumps(
            [{"slots": ["%s:%s" % s for s in m.slots], "support": m.support, "count": m.count}
             for m in mined],
            indent=2,
        ) + "\n",
        encoding="utf-8",
    )
    write_manifest(out, "mine", settings.resolved(), [settings.get("dataset")], [target])
    print(f"{len(mined)} candidates -> {target}")
    return EXIT_OK


def cmd_train(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    kind = ModelKind(settings.get("kind", "LogisticRegression"))
    seed = int(settings.require("seed"))
    matches_path = settings.get("from_match")
    if matches_path:
        matches = {m.report_id: m for m in load_match_reports(matches_path)}
    else:
        matches = _match_all(dataset, lexicon, pattern_set, int(settings.get("jobs", 1)))
    vectors = [vectorize(matches[r.id], pattern_set) for r in dataset]
    labels = [r.label for r in dataset]
    model = train(kind, vectors, labels, seed=seed)
    out = _out_dir(settings)
    target = out / "model.txt"
    save_model(model, target)
    write_manifest(out, "train", settings.resolved(),
                   [settings.get("dataset"), matches_path], [target])
    print(f"trained {kind.value} (final loss {model.final_loss:.6f}) -> {target}")
    return EXIT_OK


def cmd_classify(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    matches_path = settings.get("from_match")
    if matches_path:
        matches = {m.report_id: m for m in load_match_reports(matches_path)}
    else:
        matches = _match_all(dataset, lexicon, pattern_set, int(settings.get("jobs", 1)))
    model_path = settings.get("model")
    out = _out_dir(settings)
    target = out / "classifications.jsonl"
    with open(target, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format": "lptriage-classifications", "version": 1}) + "\n")
        if model_path:
            model = load_model(model_path)
            for report in dataset:
                c = predict(model, vectorize(matches[report.id], pattern_set))
                f.write(json.dumps({"report_id": c.report_id, "predicted": c.predicted.value,
                                    "score": c.score}) + "\n")
        else:
            level = _parse_level(settings.get("level", "br"))
            for report in dataset:
                c = classify_by_matching(matches[report.id], level)
                f.write(json.dumps({"report_id": c.report_id, "predicted": c.predicted.value,
                                    "score": c.score}) + "\n")
    write_manifest(out, "classify", settings.resolved(),
                   [settings.get("dataset"), matches_path, model_path], [target])
    print(f"classified {len(dataset)} reports -> {target}")
    return EXIT_OK


def cmd_prompt(settings: Settings) -> int:
    _, pattern_set, dataset = _load_inputs(settings)
    exemplars = int(settings.get("exemplars", 1))
    seed = int(settings.require("seed"))
    do_query = bool(settings.get("query", False))
    endpoint = _endpoint_from_settings(settings)
    out = _out_dir(settings)
    target = out / "prompts.jsonl"
    with open(target, "w", encoding="utf-8") as f:
        for report in dataset:
            bundle = build_prompt(pattern_set, report, exemplar_count=exemplars, seed=seed)
            record = {"report_id": report.id, "prompt_hash": bundle.prompt_hash,
                      "rendered": bundle.rendered}
            if do_query:
                response = query(endpoint, bundle)
                record["verdict"] = response.verdict.value
                record["raw_response"] = response.raw
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    write_manifest(out, "prompt", settings.resolved(), [settings.get("dataset")], [target])
    print(f"wrote {target}")
    return EXIT_OK


def cmd_export_finetune(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    matches = _match_all(dataset, lexicon, pattern_set, int(settings.get("jobs", 1)))
    out = _out_dir(settings)
    target = out / "finetune.jsonl"
    count = export_finetune_file(dataset, matches, pattern_set, target, lexicon=lexicon)
    write_manifest(out, "export-finetune", settings.resolved(),
                   [settings.get("dataset")], [target])
    print(f"exported {count} records -> {target}")
    return EXIT_OK


def cmd_eval(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    out = _out_dir(settings)
    method = settings.get("method", "matching")
    seed = int(settings.get("seed", 0))
    matches = _match_all(dataset, lexicon, pattern_set, int(settings.get("jobs", 1)))
    if method == "matching":
        level_names = settings.get("levels", "word,phrase,sentence,br")
        levels = [_parse_level(n) for n in str(level_names).split(",") if n.strip()]
        report = level_sweep(dataset, levels, lexicon, pattern_set, matches=matches)
    elif method == "learning":
        config = MethodConfig(
            method="learning",
            kind=ModelKind(settings.get("kind", "LogisticRegression")),
        )
        report = cross_validate(dataset, int(settings.get("k", 10)), config, seed,
                                lexicon, pattern_set, matches=matches)
    elif method == "prompt":
        endpoint = _endpoint_from_settings(settings)
        report = evaluate_prompt_method(dataset, pattern_set, endpoint,
                                        exemplar_count=int(settings.get("exemplars", 1)),
                                        seed=seed)
    else:
        raise UsageError(f"unknown eval method {method!r}")
    csv_target = out / "eval.csv"
    save_report(report, csv_target, ReportFormat.CSV,
                inputs={"dataset": str(settings.get("dataset")),
                        "dataset_sha256": dataset_hash(dataset)})
    table_target = out / "eval.txt"
    table_target.write_text(render_report(report, ReportFormat.PLAIN), encoding="utf-8")
    write_manifest(out, "eval", settings.resolved(), [settings.get("dataset")],
                   [csv_target, table_target])
    print(render_report(report, ReportFormat.PLAIN))
    return EXIT_OK


def cmd_saturate(settings: Settings) -> int:
    lexicon, pattern_set, dataset = _load_inputs(settings)
    unit = SaturationUnit(settings.get("unit", "SubsetTenths"))
    seed = int(settings.require("seed"))
    curve = saturation_curve(dataset, lexicon, pattern_set, unit, seed=seed)
    out = _out_dir(settings)
    target = out / "saturation.json"
    payload = {
        "unit": unit.value,
        "holdout_size": curve.holdout_size,
        "full_recall": {
            "word": curve.full_word_recall,
            "phrase": curve.full_phrase_recall,
            "sentence": curve.full_sentence_recall,
        },
        "points": [vars(p) for p in curve.points],
    }
    target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "saturate", settings.resolved(), [settings.get("dataset")], [target])
    print(f"wrote {target}")
    return EXIT_OK


def cmd_validate(settings: Settings) -> int:
    lexicon_path = settings.get("lexicon")
    patterns_path = settings.get("patterns")
    lexicon = load_lexicon(lexicon_path)
    for warning in lexicon.warnings:
        print(f"lexicon warning: {warning}")
    pattern_set = load_pattern_set(patterns_path)
    counts = pattern_set.level_counts()
    print(f"lexicon: {len(lexicon.categories)} categories, "
          f"{sum(len(c.entries) for c in lexicon.categories.values())} entries")
    print(f"patterns: {counts} (total {len(pattern_set)})")
    dataset_path = settings.get("dataset")
    if dataset_path:
        dataset = load_dataset(dataset_path)
        print(f"dataset: {len(dataset)} reports")
    print("ok")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lptriage",
        description="Classify concurrency-related issue reports via linguistic patterns.",
    )
    parser.add_argument("--version", action="version", version=f"lptriage {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--lexicon", help="lexicon file (default: shipped)")
        p.add_argument("--patterns", help="pattern-set file (default: shipped)")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--jobs", type=int, help="parallel workers (default 1)")
        for args, kwargs in flags:
            p.add_argument(*args, **kwargs)
        p.set_defaults(func=func)
        return p

    dataset_flag = (("--dataset",), {"help": "canonical dataset file"})
    labels_flag = (("--sentence-labels",), {"dest": "sentence_labels",
                                            "help": "sentence-label sidecar file"})
    seed_flag = (("--seed",), {"type": int, "help": "RNG seed (required, never implicit)"})

    add("ingest", cmd_ingest, "convert a tracker export to the canonical format", [
        (("--input",), {"help": "source export file"}),
        (("--format",), {"help": "GitHubJson | JiraJson | Jsonl"}),
    ])
    add("split", cmd_split, "stratified ratio or k-fold split", [
        dataset_flag, seed_flag,
        (("--strategy",), {"help": "Ratio | StratifiedKFold"}),
        (("--ratio",), {"type": float}), (("--k",), {"type": int}),
    ])
    add("downsample", cmd_downsample, "downsample negatives to a target prevalence", [
        dataset_flag, seed_flag,
        (("--positive-fraction",), {"dest": "positive_fraction", "type": float}),
    ])
    add("preprocess", cmd_preprocess, "dump processed sentences", [dataset_flag])
    add("match", cmd_match, "run all four pattern levels", [dataset_flag])
    add("mine", cmd_mine, "mine phrase candidates from labeled sentences", [
        dataset_flag, labels_flag,
        (("--n",), {"type": int}), (("--min-support",), {"dest": "min_support", "type": float}),
    ])
    add("train", cmd_train, "train a feature-vector classifier", [
        dataset_flag, seed_flag,
        (("--kind",), {"help": "NaiveBayes | LogisticRegression | LinearSVM"}),
        (("--from-match",), {"dest": "from_match", "help": "reuse a matches.jsonl"}),
    ])
    add("classify", cmd_classify, "classify reports (matching or trained model)", [
        dataset_flag,
        (("--level",), {"help": "matching level: word|phrase|sentence|br"}),
        (("--model",), {"help": "trained model file"}),
        (("--from-match",), {"dest": "from_match", "help": "reuse a matches.jsonl"}),
    ])
    add("prompt", cmd_prompt, "render (and optionally send) LLM prompts", [
        dataset_flag, seed_flag,
        (("--exemplars",), {"type": int}),
        (("--query",), {"action": "store_true", "default": None}),
        (("--llm-url",), {"dest": "llm_url"}), (("--llm-model",), {"dest": "llm_model"}),
        (("--llm-key",), {"dest": "llm_key"}),
        (("--transcript",), {}), (("--replay",), {"action": "store_true", "default": None}),
    ])
    add("export-finetune", cmd_export_finetune, "write the fine-tuning export", [dataset_flag])
    add("eval", cmd_eval, "score matching / learning / prompt methods", [
        dataset_flag, labels_flag, seed_flag,
        (("--method",), {"help": "matching | learning | prompt"}),
        (("--levels",), {"help": "comma list for matching sweeps"}),
        (("--kind",), {}), (("--k",), {"type": int}),
        (("--exemplars",), {"type": int}),
        (("--llm-url",), {"dest": "llm_url"}), (("--llm-model",), {"dest": "llm_model"}),
        (("--llm-key",), {"dest": "llm_key"}),
        (("--transcript",), {}), (("--replay",), {"action": "store_true", "default": None}),
    ])
    add("saturate", cmd_saturate, "iterative pattern-saturation curves", [
        dataset_flag, labels_flag, seed_flag,
        (("--unit",), {"help": "SubsetTenths | ByProject"}),
    ])
    add("validate", cmd_validate, "validate lexicon/pattern/config files", [dataset_flag])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return args.func(settings)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LptriageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
