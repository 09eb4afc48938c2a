"""Training loop: binary cross-entropy, stratified validation, early stopping.

Hyperparameters stay inside the documented fine-tuning grid (encoder
learning rate 1e-5..5e-5, at most 10 epochs, batch size 8/16/32).  The
freshly-initialized classification head uses the conventional higher rate
(a fixed multiplier of the encoder rate), as it has no pretrained weights
to preserve.
"""

import json
import random
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import torch
from torch import nn

from .data import Vocab, read_export, tokenize
from .model import TinyEncoderClassifier, pad_batch

LOCAL_CHECKPOINT = "local-tiny"
HEAD_LR_MULTIPLIER = 100.0


class NonDecreasingLossWarning(UserWarning):
    pass


@dataclass
class FinetuneConfig:
    model: str = LOCAL_CHECKPOINT
    learning_rate: float = 5e-5
    batch_size: int = 16
    epochs: int = 10
    max_seq_len: int = 512
    seed: int = 13
    patience: int = 3
    validation_fraction: float = 0.2

    def validate(self):
        if not 1e-5 <= self.learning_rate <= 5e-5:
            raise ValueError(f"learning_rate {self.learning_rate} outside [1e-5, 5e-5]")
        if self.epochs > 10 or self.epochs < 1:
            raise ValueError(f"epochs {self.epochs} outside 1..10")
        if self.batch_size not in (8, 16, 32):
            raise ValueError(f"batch_size {self.batch_size} not in {{8, 16, 32}}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in (0, 1)")


def stratified_split(records, fraction: float, seed: int):
    by_label = {0: [], 1: []}
    for rec in records:
        by_label[rec[1]].append(rec)
    rng = random.Random(seed)
    train, val = [], []
    for label, items in sorted(by_label.items()):
        items = items[:]
        rng.shuffle(items)
        cut = max(1, int(round(fraction * len(items)))) if len(items) > 1 else 0
        val.extend(items[:cut])
        train.extend(items[cut:])
    rng.shuffle(train)
    return train, val


def _epoch_batches(encoded, batch_size, rng):
    order = list(range(len(encoded)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [encoded[i] for i in order[start:start + batch_size]]


def _mean_loss(model, encoded, loss_fn, batch_size=32):
    model.eval()
    total, n = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(encoded), batch_size):
            batch = encoded[start:start + batch_size]
            ids = pad_batch([b[0] for b in batch])
            labels = torch.tensor([b[1] for b in batch], dtype=torch.float)
            total += float(loss_fn(model(ids), labels)) * len(batch)
            n += len(batch)
    return total / max(n, 1)


def train_classifier(export_path, config: FinetuneConfig, out_dir) -> dict:
    """Train on an export file; persist model, vocab, config and metrics.

    Returns the training summary (also written to out_dir/metrics.json).
    """
    config.validate()
    if config.model != LOCAL_CHECKPOINT:
        raise ValueError(
            f"checkpoint {config.model!r} requires model-hub access; "
            f"only {LOCAL_CHECKPOINT!r} is available offline"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = read_export(export_path)
    train_recs, val_recs = stratified_split(records, config.validation_fraction, config.seed)

    torch.manual_seed(config.seed)
    vocab = Vocab.build([t for t, _l in train_recs])
    truncated = 0

    def encode(recs):
        nonlocal truncated
        out = []
        for text, label in recs:
            ids, was_truncated = vocab.encode(tokenize(text), config.max_seq_len)
            truncated += was_truncated
            out.append((ids, label))
        return out

    train_enc = encode(train_recs)
    val_enc = encode(val_recs)

    model = TinyEncoderClassifier(len(vocab), max_len=config.max_seq_len)
    pos = sum(l for _t, l in train_recs)
    neg = len(train_recs) - pos
    pos_weight = torch.tensor(neg / max(pos, 1), dtype=torch.float)
    loss_fn = nn.BCEWithLogitsLoss(pos_weight=pos_weight)
    optimizer = torch.optim.AdamW([
        {"params": list(model.encoder_parameters()), "lr": config.learning_rate},
        {"params": list(model.head_parameters()),
         "lr": config.learning_rate * HEAD_LR_MULTIPLIER},
    ])

    rng = random.Random(config.seed)
    log_path = out_dir / "training_log.jsonl"
    history = []
    best_val = float("inf")
    best_state = None
    best_epoch = 0
    bad_epochs = 0
    with open(log_path, "w", encoding="utf-8") as log:
        if truncated:
            log.write(json.dumps({"event": "truncation",
                                  "records_truncated": truncated,
                                  "max_seq_len": config.max_seq_len}) + "\n")
        for epoch in range(1, config.epochs + 1):
            model.train()
            for batch in _epoch_batches(train_enc, config.batch_size, rng):
                ids = pad_batch([b[0] for b in batch])
                labels = torch.tensor([b[1] for b in batch], dtype=torch.float)
                optimizer.zero_grad()
                loss = loss_fn(model(ids), labels)
                loss.backward()
                optimizer.step()
            train_loss = _mean_loss(model, train_enc, loss_fn)
            val_loss = _mean_loss(model, val_enc, loss_fn) if val_enc else train_loss
            history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
            log.write(json.dumps(history[-1]) + "\n")
            if val_loss < best_val - 1e-6:
                best_val = val_loss
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
                best_epoch = epoch
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= config.patience:
                    log.write(json.dumps({"event": "early_stop", "epoch": epoch}) + "\n")
                    break

    if best_state is not None:
        model.load_state_dict(best_state)
    if len(history) >= 2 and history[-1]["train_loss"] >= history[0]["train_loss"]:
        warnings.warn(
            f"training loss did not decrease ({history[0]['train_loss']:.4f} -> "
            f"{history[-1]['train_loss']:.4f})",
            NonDecreasingLossWarning,
        )

    torch.save(model.state_dict(), out_dir / "model.pt")
    (out_dir / "vocab.json").write_text(vocab.to_json(), encoding="utf-8")
    (out_dir / "config.json").write_text(json.dumps(asdict(config), indent=2) + "\n",
                                         encoding="utf-8")
    summary = {
        "records": len(records),
        "train_size": len(train_recs),
        "val_size": len(val_recs),
        "epochs_run": len(history),
        "best_epoch": best_epoch,
        "first_train_loss": history[0]["train_loss"] if history else None,
        "final_train_loss": history[-1]["train_loss"] if history else None,
        "best_val_loss": best_val if val_enc else None,
        "records_truncated": truncated,
    }
    (out_dir / "metrics.json").write_text(json.dumps(summary, indent=2) + "\n",
                                          encoding="utf-8")
    return summary


def load_trained(model_dir):
    model_dir = Path(model_dir)
    config = FinetuneConfig(**json.loads((model_dir / "config.json").read_text()))
    vocab = Vocab.from_json((model_dir / "vocab.json").read_text())
    model = TinyEncoderClassifier(len(vocab), max_len=config.max_seq_len)
    model.load_state_dict(torch.load(model_dir / "model.pt", weights_only=True))
    model.eval()
    return model, vocab, config
