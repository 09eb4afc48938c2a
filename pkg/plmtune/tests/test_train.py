import json
import warnings

import pytest
import torch

from plmtune.evaluate import SchemaMismatch, evaluate_classifier, prf
from plmtune.train import (
    FinetuneConfig,
    NonDecreasingLossWarning,
    stratified_split,
    train_classifier,
)


@pytest.mark.parametrize("field,value", [
    ("learning_rate", 1e-3),
    ("learning_rate", 1e-6),
    ("epochs", 11),
    ("batch_size", 7),
])
def test_config_grid_enforced(field, value):
    config = FinetuneConfig(**{field: value})
    with pytest.raises(ValueError):
        config.validate()


def test_hub_checkpoints_rejected_offline(tiny_export, tmp_path):
    config = FinetuneConfig(model="some/hub-model")
    with pytest.raises(ValueError):
        train_classifier(tiny_export, config, tmp_path / "m")


def test_stratified_split_keeps_both_classes():
    records = [(f"t{i}", 1 if i < 5 else 0) for i in range(50)]
    train, val = stratified_split(records, 0.2, seed=3)
    assert len(train) + len(val) == 50
    assert any(l == 1 for _t, l in val) and any(l == 0 for _t, l in val)


def test_training_smoke_loss_decreases(tiny_export, tmp_path):
    config = FinetuneConfig(epochs=4, batch_size=8, seed=5, validation_fraction=0.25)
    summary = train_classifier(tiny_export, config, tmp_path / "m")
    assert summary["final_train_loss"] < summary["first_train_loss"]
    assert summary["epochs_run"] <= 4
    log = (tmp_path / "m" / "training_log.jsonl").read_text().splitlines()
    epochs = [json.loads(l) for l in log if "epoch" in json.loads(l)]
    assert len(epochs) == summary["epochs_run"]
    for artifact in ("model.pt", "vocab.json", "config.json", "metrics.json"):
        assert (tmp_path / "m" / artifact).exists()


def test_training_deterministic_per_seed(tiny_export, tmp_path):
    config = FinetuneConfig(epochs=3, batch_size=8, seed=11, validation_fraction=0.25)
    a = train_classifier(tiny_export, config, tmp_path / "a")
    b = train_classifier(tiny_export, config, tmp_path / "b")
    assert a["final_train_loss"] == b["final_train_loss"]
    wa = torch.load(tmp_path / "a" / "model.pt", weights_only=True)
    wb = torch.load(tmp_path / "b" / "model.pt", weights_only=True)
    assert all(torch.equal(wa[k], wb[k]) for k in wa)


def test_non_decreasing_loss_warns(tiny_export, tmp_path, monkeypatch):
    # freeze the optimizer so no learning can happen
    monkeypatch.setattr(torch.optim.AdamW, "step", lambda self, closure=None: None)
    config = FinetuneConfig(epochs=3, batch_size=8, seed=2, validation_fraction=0.25,
                            patience=10)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        train_classifier(tiny_export, config, tmp_path / "m")
    assert any(issubclass(w.category, NonDecreasingLossWarning) for w in caught)


def test_early_stopping_respects_patience(tiny_export, tmp_path, monkeypatch):
    monkeypatch.setattr(torch.optim.AdamW, "step", lambda self, closure=None: None)
    config = FinetuneConfig(epochs=10, batch_size=8, seed=2, validation_fraction=0.25,
                            patience=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        summary = train_classifier(tiny_export, config, tmp_path / "m")
    # epoch 1 sets the best; two non-improving epochs then stop
    assert summary["epochs_run"] == 3


def test_evaluate_on_own_training_file(tiny_export, tmp_path):
    config = FinetuneConfig(epochs=5, batch_size=8, seed=7, validation_fraction=0.25)
    train_classifier(tiny_export, config, tmp_path / "m")
    p, r, f = evaluate_classifier(tmp_path / "m", tiny_export)
    assert f == 1.0  # perfectly separable synthetic export


def test_evaluate_rejects_non_model_dir(tiny_export, tmp_path):
    with pytest.raises(SchemaMismatch):
        evaluate_classifier(tmp_path, tiny_export)


def test_prf_conventions_match_upstream():
    assert prf(0, 0, 5) == (0.0, 0.0, 0.0)
    p, r, f = prf(tp=7, fp=3, fn=2)
    assert p == 0.7 and r == pytest.approx(7 / 9)
    assert f == pytest.approx(2 * p * r / (p + r))
