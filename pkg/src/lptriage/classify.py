"""Classifiers over pattern matches: threshold matching, feature vectors,
and small trainable linear models with exact persistence.

The learning side is deliberately self-contained: logistic regression and a
linear SVM trained by full-batch gradient descent on L2-regularized loss,
and Bernoulli naive Bayes with Laplace smoothing.  Gradients are exposed so
they can be checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Label
from .errors import LayoutMismatch, NonFiniteLoss, SingleClassData
from .patterns import Level, MatchReport, PatternSet

MODEL_FORMAT = "lptriage-model"
MODEL_VERSION = 1


class ModelKind(str, Enum):
    NAIVE_BAYES = "NaiveBayes"
    LOGISTIC_REGRESSION = "LogisticRegression"
    LINEAR_SVM = "LinearSVM"


class RebalanceMethod(str, Enum):
    NONE = "None"
    RANDOM_OVERSAMPLE = "RandomOversample"
    SMOTE = "Smote"


DEFAULT_HYPERPARAMETERS = {
    "learning_rate": 0.1,
    "l2": 1e-3,
    "epochs": 500,
    "alpha": 1.0,  # Laplace smoothing (naive Bayes only)
}


@dataclass(frozen=True)
class FeatureVector:
    report_id: str
    bits: tuple  # 0/1 per pattern, pattern-set order
    layout_hash: str

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.float64)


@dataclass(frozen=True)
class Classification:
    report_id: str
    predicted: Label
    score: float
    evidence: Optional[MatchReport] = None


@dataclass
class TrainedModel:
    kind: ModelKind
    params: dict  # name -> np.ndarray
    feature_layout_hash: str
    hyperparameters: dict = field(default_factory=lambda: dict(DEFAULT_HYPERPARAMETERS))
    threshold: float = 0.5
    final_loss: float = float("nan")


def vectorize(match_report: MatchReport, pattern_set: PatternSet) -> FeatureVector:
    """Binary vector over the pattern-set layout: bit i = 1 iff pattern i hit."""
    if match_report.pattern_set_hash and match_report.pattern_set_hash != pattern_set.layout_hash:
        raise LayoutMismatch(
            f"match report built against pattern set {match_report.pattern_set_hash[:12]}, "
            f"vectorizing against {pattern_set.layout_hash[:12]}"
        )
    matched = match_report.matched_ids()
    unknown = matched - set(pattern_set.layout)
    if unknown:
        raise LayoutMismatch(f"hits reference unknown patterns: {sorted(unknown)}")
    bits = tuple(1 if pid in matched else 0 for pid in pattern_set.layout)
    return FeatureVector(match_report.report_id, bits, pattern_set.layout_hash)


def classify_by_matching(match_report: MatchReport, level: Level) -> Classification:
    """Positive iff the chosen level has at least one hit."""
    hit = bool(match_report.hits_for(Level(level)))
    return Classification(
        report_id=match_report.report_id,
        predicted=Label.CONCURRENCY if hit else Label.NON_CONCURRENCY,
        score=1.0 if hit else 0.0,
        evidence=match_report,
    )


# ---------------------------------------------------------------------------
# Losses and gradients (public so tests can finite-difference them)

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w, b, X, y, l2):
    """L2-regularized mean log-loss and its analytic gradient."""
    z = X @ w + b
    p = _sigmoid(z)
    eps = 1e-12
    loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)) + 0.5 * l2 * np.dot(w, w)
    gw = X.T @ (p - y) / len(y) + l2 * w
    gb = float(np.mean(p - y))
    return float(loss), gw, gb


def hinge_loss_grad(w, b, X, y, l2):
    """L2-regularized mean hinge loss (labels in {0,1}) and a subgradient."""
    t = 2.0 * y - 1.0
    margins = t * (X @ w + b)
    viol = margins < 1.0
    loss = float(np.mean(np.maximum(0.0, 1.0 - margins))) + 0.5 * l2 * float(np.dot(w, w))
    gw = -(X[viol].T @ t[viol]) / len(y) + l2 * w
    gb = float(-np.sum(t[viol]) / len(y))
    return loss, gw, gb


def _train_gd(kind: ModelKind, X, y, hp) -> tuple[np.ndarray, float, float]:
    loss_grad = logistic_loss_grad if kind == ModelKind.LOGISTIC_REGRESSION else hinge_loss_grad
    w = np.zeros(X.shape[1])
    b = 0.0
    lr = hp["learning_rate"]
    loss = float("nan")
    for _ in range(int(hp["epochs"])):
        loss, gw, gb = loss_grad(w, b, X, y, hp["l2"])
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"{kind.value} training diverged (loss={loss})")
        w -= lr * gw
        b -= lr * gb
    return w, b, loss


def train(
    kind: ModelKind,
    vectors: Sequence[FeatureVector],
    labels: Sequence[Label],
    hyperparameters: Optional[dict] = None,
    seed: int = 0,
) -> TrainedModel:
    """Deterministic training; records the final training loss."""
    kind = ModelKind(kind)
    hp = dict(DEFAULT_HYPERPARAMETERS)
    if hyperparameters:
        hp.update(hyperparameters)
    if not vectors:
        raise SingleClassData("no training examples")
    layout_hash = vectors[0].layout_hash
    if any(v.layout_hash != layout_hash for v in vectors):
        raise LayoutMismatch("training vectors span different pattern-set layouts")
    X = np.stack([v.as_array() for v in vectors])
    y = np.array([1.0 if l == Label.CONCURRENCY else 0.0 for l in labels])
    if len(set(y.tolist())) < 2:
        raise SingleClassData("need at least one example per class")

    if kind == ModelKind.NAIVE_BAYES:
        alpha = float(hp["alpha"])
        params = {}
        log_prior = np.empty(2)
        cond = np.empty((2, X.shape[1]))
        for cls in (0, 1):
            mask = y == cls
            n_cls = float(mask.sum())
            log_prior[cls] = np.log(n_cls / len(y))
            cond[cls] = (X[mask].sum(axis=0) + alpha) / (n_cls + 2.0 * alpha)
        params["log_prior"] = log_prior
        params["cond_prob"] = cond
        # final training loss: mean negative log posterior of the true class
        scores = _nb_scores(params, X)
        p_true = np.where(y == 1.0, scores, 1.0 - scores)
        final_loss = float(-np.mean(np.log(np.clip(p_true, 1e-12, None))))
        return TrainedModel(kind, params, layout_hash, hp, final_loss=final_loss)

    w, b, final_loss = _train_gd(kind, X, y, hp)
    return TrainedModel(kind, {"weights": w, "bias": np.array([b])}, layout_hash, hp,
                        final_loss=final_loss)


def _nb_scores(params: dict, X: np.ndarray) -> np.ndarray:
    cond = np.clip(params["cond_prob"], 1e-12, 1 - 1e-12)
    log_lik = X @ np.log(cond).T + (1 - X) @ np.log(1 - cond).T  # (n, 2)
    joint = log_lik + params["log_prior"]
    shift = joint.max(axis=1, keepdims=True)
    probs = np.exp(joint - shift)
    return probs[:, 1] / probs.sum(axis=1)


def decision_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    if model.kind == ModelKind.NAIVE_BAYES:
        return _nb_scores(model.params, X)
    z = X @ model.params["weights"] + model.params["bias"][0]
    return _sigmoid(z)


def predict(model: TrainedModel, vector: FeatureVector) -> Classification:
    """Score in [0,1]; score >= threshold classifies positive (documented
    tie-break: exactly-at-threshold goes to the positive class)."""
    if vector.layout_hash != model.feature_layout_hash:
        raise LayoutMismatch(
            f"vector layout {vector.layout_hash[:12]} != model layout "
            f"{model.feature_layout_hash[:12]}"
        )
    score = float(decision_scores(model, vector.as_array()[None, :])[0])
    predicted = Label.CONCURRENCY if score >= model.threshold else Label.NON_CONCURRENCY
    return Classification(vector.report_id, predicted, score)


# ---------------------------------------------------------------------------
# Rebalancing

def rebalance(
    vectors: Sequence[FeatureVector],
    labels: Sequence[Label],
    method: RebalanceMethod,
    target_ratio: float = 1.0,
    seed: int = 0,
) -> tuple[list, list]:
    """Resample the minority class.

    RandomOversample duplicates minority examples uniformly at random until
    minority ~= target_ratio * majority.  Smote interpolates between minority
    nearest neighbours and re-binarizes each coordinate at 0.5 (adaptation
    for binary features).  Originals are always preserved.
    """
    method = RebalanceMethod(method)
    vectors = list(vectors)
    labels = list(labels)
    if method == RebalanceMethod.NONE:
        return vectors, labels
    classes = set(labels)
    if len(classes) < 2:
        raise SingleClassData("need two classes to rebalance")
    counts = {c: labels.count(c) for c in classes}
    minority = min(counts, key=lambda c: counts[c])
    majority_count = max(counts.values())
    target = int(round(target_ratio * majority_count))
    need = target - counts[minority]
    if need <= 0:
        return vectors, labels
    rng = np.random.RandomState(seed)
    minority_vecs = [v for v, l in zip(vectors, labels) if l == minority]

    synth: list[FeatureVector] = []
    if method == RebalanceMethod.RANDOM_OVERSAMPLE:
        picks = rng.randint(0, len(minority_vecs), size=need)
        for i, pick in enumerate(picks):
            src = minority_vecs[pick]
            synth.append(FeatureVector(f"{src.report_id}#dup{i}", src.bits, src.layout_hash))
    else:
        M = np.stack([v.as_array() for v in minority_vecs])
        k = min(5, len(minority_vecs) - 1)
        if k < 1:
            raise SingleClassData("Smote needs at least two minority examples")
        dist = np.abs(M[:, None, :] - M[None, :, :]).sum(axis=2)  # Hamming
        np.fill_diagonal(dist, np.inf)
        neighbours = np.argsort(dist, axis=1)[:, :k]
        for i in range(need):
            a_idx = int(rng.randint(0, len(minority_vecs)))
            b_idx = int(neighbours[a_idx][rng.randint(0, k)])
            u = rng.random_sample()
            blended = M[a_idx] + u * (M[b_idx] - M[a_idx])
            bits = tuple(int(x >= 0.5) for x in blended)
            synth.append(
                FeatureVector(f"smote#{i}", bits, minority_vecs[0].layout_hash)
            )
    out_vecs = vectors + synth
    out_labels = labels + [minority] * len(synth)
    return out_vecs, out_labels


# ---------------------------------------------------------------------------
# Persistence (text format, exact floats via hex)

def save_model(model: TrainedModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{MODEL_FORMAT} v{MODEL_VERSION}",
        f"kind: {model.kind.value}",
        f"layout_hash: {model.feature_layout_hash}",
        f"threshold: {model.threshold.hex()}",
        f"final_loss: {float(model.final_loss).hex()}",
        f"hyperparameters: {json.dumps(model.hyperparameters, sort_keys=True)}",
    ]
    for name in sorted(model.params):
        arr = np.asarray(model.params[name], dtype=np.float64)
        flat = " ".join(v.hex() for v in arr.ravel().tolist())
        lines.append(f"param {name} shape={','.join(map(str, arr.shape))}: {flat}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> TrainedModel:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith(MODEL_FORMAT):
        raise LayoutMismatch(f"{path} is not a {MODEL_FORMAT} file")
    fields: dict = {}
    params: dict = {}
    for line in text[1:]:
        if not line.strip():
            continue
        if line.startswith("param "):
            head, _, payload = line.partition(": ")
            _, name, shape_s = head.split()
            shape = tuple(int(x) for x in shape_s.split("=")[1].split(","))
            values = [float.fromhex(tok) for tok in payload.split()]
            params[name] = np.array(values, dtype=np.float64).reshape(shape)
        else:
            key, _, value = line.partition(": ")
            fields[key] = value
    return TrainedModel(
        kind=ModelKind(fields["kind"]),
        params=params,
        feature_layout_hash=fields["layout_hash"],
        hyperparameters=json.loads(fields["hyperparameters"]),
        threshold=float.fromhex(fields["threshold"]),
        final_loss=float.fromhex(fields["final_loss"]),
    )
