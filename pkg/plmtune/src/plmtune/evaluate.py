"""Evaluation with the upstream scoring conventions and CSV schema.

Conventions (shared with the lptriage eval module): precision is
tp/(tp+fp) and recall tp/(tp+fn), both 0 when the denominator is 0; F is
the harmonic mean, 0 when P+R is 0.  The CSV columns match the upstream
renderer so rows from both tools merge cleanly.
"""

import json
from pathlib import Path

import torch

from .data import read_export, tokenize
from .train import load_trained
from .model import pad_batch

CSV_COLUMNS = ("method", "combination", "fold", "precision", "recall", "f_measure",
               "tp", "fp", "tn", "fn")


class SchemaMismatch(ValueError):
    pass


def prf(tp: int, fp: int, fn: int):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def predict_labels(model, vocab, config, texts, batch_size: int = 32):
    preds = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = texts[start:start + batch_size]
            encoded = [vocab.encode(tokenize(t), config.max_seq_len)[0] for t in chunk]
            logits = model(pad_batch(encoded))
            preds.extend((torch.sigmoid(logits) >= 0.5).long().tolist())
    return preds


def evaluate_classifier(model_dir, export_path, csv_out=None, method_name=None):
    """Score a saved model on a labeled export; returns (P, R, F)."""
    try:
        model, vocab, config = load_trained(model_dir)
    except (FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"not a trained model directory: {model_dir} ({exc})")
    records = read_export(export_path)
    texts = [t for t, _l in records]
    gold = [l for _t, l in records]
    preds = predict_labels(model, vocab, config, texts)
    tp = sum(1 for p, g in zip(preds, gold) if p == 1 and g == 1)
    fp = sum(1 for p, g in zip(preds, gold) if p == 1 and g == 0)
    fn = sum(1 for p, g in zip(preds, gold) if p == 0 and g == 1)
    tn = len(gold) - tp - fp - fn
    p, r, f = prf(tp, fp, fn)
    if csv_out is not None:
        write_metrics_csv(csv_out, method_name or f"PLM({config.model})",
                          p, r, f, tp, fp, tn, fn)
    return p, r, f


def write_metrics_csv(path, method, p, r, f, tp, fp, tn, fn, combination="ALL"):
    row = {
        "method": method, "combination": combination, "fold": "",
        "precision": repr(p), "recall": repr(r), "f_measure": repr(f),
        "tp": str(tp), "fp": str(fp), "tn": str(tn), "fn": str(fn),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS), ",".join(row[c] for c in CSV_COLUMNS)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
