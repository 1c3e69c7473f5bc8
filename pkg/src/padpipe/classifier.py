"""Feature normalization, the fully-connected classifier, CV, and metrics.

The network is a two-hidden-layer ReLU perceptron with a softmax head,
Xavier-uniform initialization, cross-entropy loss, Adam, and a
reduce-on-plateau learning-rate schedule.  Everything is float64 numpy and
deterministic given a seed.  Class index 1 is "spoof"; scores are the softmax
probability of that class.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import LayoutMismatch, MetricsUndefined, TrainingDiverged

STD_FLOOR = 1e-8

HIDDEN_SIZES = (400, 400)
N_CLASSES = 2

MODEL_FORMAT = "padpipe-model"
MODEL_FORMAT_VERSION = 1

DEFAULT_BPCER_TARGETS = (0.002, 0.01)


# ---------------------------------------------------------------------------
# Normalization


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature training mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray
    floored: tuple = ()

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean/std must be matching 1-D arrays")
        if np.any(std <= 0):
            raise ValueError("stds must be positive after flooring")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "floored", tuple(self.floored))


def fit_normalizer(rows: np.ndarray) -> NormalizationStats:
    """Zero-mean/unit-variance stats; constant features floored and recorded."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("normalizer needs at least 2 training rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population
    floored = tuple(int(i) for i in np.flatnonzero(std < STD_FLOOR))
    std = np.maximum(std, STD_FLOOR)
    return NormalizationStats(mean=mean, std=std, floored=floored)


def apply_normalizer(stats: NormalizationStats, rows: np.ndarray) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if X.shape[-1] != stats.mean.shape[0]:
        raise LayoutMismatch(
            f"rows have {X.shape[-1]} features, normalizer expects {stats.mean.shape[0]}"
        )
    return (X - stats.mean) / stats.std


# ---------------------------------------------------------------------------
# Network


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes [input, hidden..., 2] for the ReLU/softmax classifier."""

    layer_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or sizes[-1] != N_CLASSES:
            raise ValueError(f"layer sizes must end in {N_CLASSES} outputs")
        if any(s <= 0 for s in sizes):
            raise ValueError("layer sizes must be positive")
        object.__setattr__(self, "layer_sizes", sizes)

    @classmethod
    def for_features(cls, n_features: int, hidden=HIDDEN_SIZES) -> "NetworkSpec":
        return cls(layer_sizes=(int(n_features),) + tuple(hidden) + (N_CLASSES,))


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 50
    batch_size: int = 128
    plateau_patience: int = 10
    plateau_factor: float = 0.1
    plateau_min_delta: float = 1e-6
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValueError("plateau factor must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "lr0": self.lr0,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "plateau_patience": self.plateau_patience,
            "plateau_factor": self.plateau_factor,
            "plateau_min_delta": self.plateau_min_delta,
            "val_fraction": self.val_fraction,
            "seed": self.seed,
        }


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` stale epochs.

    An epoch is stale when the monitored loss fails to improve on the best
    seen value by more than ``min_delta``.
    """

    def __init__(self, lr0: float, factor: float, patience: int, min_delta: float):
        self.lr = float(lr0)
        self.factor = float(factor)
        self.patience = int(patience)
        self.min_delta = float(min_delta)
        self.best = math.inf
        self.stale = 0
        self.trace = []

    def step(self, monitored: float) -> float:
        if monitored < self.best - self.min_delta:
            self.best = monitored
            self.stale = 0
        else:
            self.stale += 1
            if self.stale >= self.patience:
                self.lr *= self.factor
                self.stale = 0
        self.trace.append(self.lr)
        return self.lr


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> list:
    """Xavier-uniform weights, zero biases, one (W, b) pair per layer."""
    params = []
    for fan_in, fan_out in zip(spec.layer_sizes, spec.layer_sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = np.zeros(fan_out, dtype=np.float64)
        params.append((W, b))
    return params


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params, X: np.ndarray):
    """Softmax probabilities plus the activations needed for backprop."""
    acts = [np.asarray(X, dtype=np.float64)]
    pre = []
    h = acts[0]
    for i, (W, b) in enumerate(params):
        z = h @ W + b
        pre.append(z)
        h = z if i == len(params) - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return _softmax(pre[-1]), acts, pre


def predict_proba(params, X: np.ndarray) -> np.ndarray:
    probs, _, _ = forward(params, X)
    return probs


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs[np.arange(len(y)), y], 1e-300, None)
    return float(-np.log(p).mean())


def loss_and_grads(params, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its analytic gradients for every (W, b)."""
    probs, acts, pre = forward(params, X)
    n = len(y)
    loss = cross_entropy(probs, y)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        gW = acts[i].T @ delta
        gb = delta.sum(axis=0)
        grads[i] = (gW, gb)
        if i > 0:
            delta = (delta @ W.T) * (pre[i - 1] > 0.0)
    return loss, grads


@dataclass
class TrainResult:
    params: list
    loss_trace: list
    monitor_trace: list
    lr_trace: list
    diverged_at: int | None = None


def train_network(
    spec: NetworkSpec,
    config: TrainConfig,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> TrainResult:
    """Run the full training recipe; deterministic given config.seed.

    When no validation rows are supplied a ``val_fraction`` split of the
    training rows feeds the plateau monitor (falling back to the training
    loss for tiny datasets).  Raises TrainingDiverged on non-finite loss.
    """
    X = np.asarray(X_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.int64)
    if X.shape[1] != spec.layer_sizes[0]:
        raise LayoutMismatch(f"network expects {spec.layer_sizes[0]} inputs, rows have {X.shape[1]}")
    rng = np.random.default_rng(config.seed)
    if X_val is None:
        n_val = int(round(config.val_fraction * len(X)))
        order = rng.permutation(len(X))
        val_idx, train_idx = order[:n_val], order[n_val:]
        if len(train_idx) == 0:
            train_idx, val_idx = order, order[:0]
        X_val, y_val = X[val_idx], y[val_idx]
        X, y = X[train_idx], y[train_idx]

    params = init_params(spec, rng)
    m_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    sched = PlateauScheduler(
        config.lr0, config.plateau_factor, config.plateau_patience, config.plateau_min_delta
    )
    loss_trace, monitor_trace = [], []
    step = 0
    batch = max(1, int(config.batch_size))
    for epoch in range(config.epochs):
        order = rng.permutation(len(X))
        lr = sched.lr
        epoch_losses = []
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            loss, grads = loss_and_grads(params, X[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // batch} "
                    f"(rows {idx[:8].tolist()}...)"
                )
            epoch_losses.append(loss)
            step += 1
            bc1 = 1.0 - config.beta1**step
            bc2 = 1.0 - config.beta2**step
            new_params = []
            for (W, b), (gW, gb), (mW, mb), (vW, vb) in zip(params, grads, m_state, v_state):
                mW = config.beta1 * mW + (1 - config.beta1) * gW
                mb = config.beta1 * mb + (1 - config.beta1) * gb
                vW = config.beta2 * vW + (1 - config.beta2) * (gW * gW)
                vb = config.beta2 * vb + (1 - config.beta2) * (gb * gb)
                W = W - lr * (mW / bc1) / (np.sqrt(vW / bc2) + config.adam_eps)
                b = b - lr * (mb / bc1) / (np.sqrt(vb / bc2) + config.adam_eps)
                new_params.append((W, b))
                m_state[len(new_params) - 1] = (mW, mb)
                v_state[len(new_params) - 1] = (vW, vb)
            params = new_params
        train_loss = float(np.mean(epoch_losses))
        loss_trace.append(train_loss)
        if len(X_val):
            monitored = cross_entropy(predict_proba(params, X_val), y_val)
        else:
            monitored = train_loss
        monitor_trace.append(monitored)
        sched.step(monitored)
    return TrainResult(
        params=params,
        loss_trace=loss_trace,
        monitor_trace=monitor_trace,
        lr_trace=list(sched.trace),
    )


# ---------------------------------------------------------------------------
# Model bundle


@dataclass
class ModelBundle:
    """Trained weights plus everything needed to score new feature rows."""

    spec: NetworkSpec
    config: TrainConfig
    stats: NormalizationStats
    params: list
    layout_hash: str
    feature_names: tuple
    lr_trace: list = field(default_factory=list)


def predict(bundle: ModelBundle, rows: np.ndarray, layout_hash: str | None = None) -> np.ndarray:
    """Spoof score in [0, 1] per row; hard error on layout mismatch."""
    if layout_hash is not None and layout_hash != bundle.layout_hash:
        raise LayoutMismatch(
            f"feature layout {layout_hash} does not match model layout {bundle.layout_hash}"
        )
    X = apply_normalizer(bundle.stats, rows)
    return predict_proba(bundle.params, X)[:, 1]


def _encode_array(arr: np.ndarray) -> dict:
    a = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).astype(np.float64)


def save_model(bundle: ModelBundle, path, config_hash: str = "") -> None:
    """Versioned single-file model: layout hash, normalizer, LE-f64 weights."""
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "run_config_hash": config_hash,
        "layout_hash": bundle.layout_hash,
        "feature_names": list(bundle.feature_names),
        "layer_sizes": list(bundle.spec.layer_sizes),
        "train_config": bundle.config.to_dict(),
        "normalizer": {
            "mean": _encode_array(bundle.stats.mean),
            "std": _encode_array(bundle.stats.std),
            "floored": list(bundle.stats.floored),
        },
        "layers": [{"W": _encode_array(W), "b": _encode_array(b)} for W, b in bundle.params],
        "lr_trace": bundle.lr_trace,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_model(path) -> ModelBundle:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT or doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise LayoutMismatch(f"{path}: not a padpipe model (or unsupported version)")
    stats = NormalizationStats(
        mean=_decode_array(doc["normalizer"]["mean"]),
        std=_decode_array(doc["normalizer"]["std"]),
        floored=tuple(doc["normalizer"]["floored"]),
    )
    params = [(_decode_array(l["W"]), _decode_array(l["b"])) for l in doc["layers"]]
    return ModelBundle(
        spec=NetworkSpec(layer_sizes=tuple(doc["layer_sizes"])),
        config=TrainConfig(**doc["train_config"]),
        stats=stats,
        params=params,
        layout_hash=doc["layout_hash"],
        feature_names=tuple(doc["feature_names"]),
        lr_trace=list(doc.get("lr_trace", [])),
    )


# ---------------------------------------------------------------------------
# ROC metrics


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over score thresholds (spoof iff score >= t)."""

    thresholds: np.ndarray
    bpcer: np.ndarray
    apcer: np.ndarray

    def _envelope(self):
        """Unique BPCER levels with the best (lowest) APCER at each."""
        uniq_b, inverse = np.unique(self.bpcer, return_inverse=True)
        best_a = np.full(len(uniq_b), np.inf)
        np.minimum.at(best_a, inverse, self.apcer)
        return uniq_b, best_a

    def apcer_at(self, bpcer_target: float) -> float:
        """APCER at the target BPCER, linearly interpolated between points."""
        uniq_b, best_a = self._envelope()
        return float(np.interp(bpcer_target, uniq_b, best_a))

    def auc(self) -> float:
        """Area under (BPCER, 1 - APCER); 1.0 is a perfect detector."""
        uniq_b, best_a = self._envelope()
        return float(np.trapezoid(1.0 - best_a, uniq_b))


def roc_metrics(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    """Sweep every achievable threshold; labels are 1 for spoof, 0 for live.

    BPCER(t) is the fraction of live scores >= t (live called spoof);
    APCER(t) is the fraction of spoof scores < t (spoof accepted).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    live = np.sort(scores[labels == 0])
    spoof = np.sort(scores[labels == 1])
    if live.size == 0 or spoof.size == 0:
        raise MetricsUndefined("both live and spoof scores are required")
    thresholds = np.concatenate([np.unique(scores), [np.inf]])
    bpcer = 1.0 - np.searchsorted(live, thresholds, side="left") / live.size
    apcer = np.searchsorted(spoof, thresholds, side="left") / spoof.size
    if np.any(np.diff(bpcer) > 0) or np.any(np.diff(apcer) < 0):
        raise AssertionError("ROC sweep must be monotone")
    return RocCurve(thresholds=thresholds, bpcer=bpcer, apcer=apcer)


# ---------------------------------------------------------------------------
# Cross validation


@dataclass
class FoldEval:
    fold: int
    test_index: np.ndarray
    scores: np.ndarray
    labels: np.ndarray
    roc: RocCurve
    apcer_at: dict


@dataclass
class EvalReport:
    """Per-fold ROC operating points and APCER at the fixed BPCER targets."""

    folds: list
    bpcer_targets: tuple
    mean_apcer: dict
    std_apcer: dict
    pooled: RocCurve
    grouped_by_subject: bool
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "bpcer_targets": list(self.bpcer_targets),
            "mean_apcer": {str(k): v for k, v in self.mean_apcer.items()},
            "std_apcer": {str(k): v for k, v in self.std_apcer.items()},
            "pooled_auc": self.pooled.auc(),
            "per_fold_apcer": [
                {str(k): v for k, v in f.apcer_at.items()} for f in self.folds
            ],
            "grouped_by_subject": self.grouped_by_subject,
            "warnings": list(self.warnings),
        }


def assign_folds(labels: np.ndarray, subjects, k: int, seed: int):
    """Stratified fold indices, grouped by subject when feasible.

    Subjects are greedily dealt (largest first, seed-shuffled tie order) to
    the fold with the fewest rows of the subject's dominant class.  When the
    grouped assignment leaves some fold without both classes, the assignment
    falls back to row-level stratification and a warning is returned.

    Returns (fold_index array, grouped flag, warnings tuple).
    """
    labels = np.asarray(labels, dtype=np.int64)
    subjects = np.asarray(subjects)
    n = len(labels)
    for cls in (0, 1):
        if int((labels == cls).sum()) < k:
            raise ValueError(f"need at least k={k} rows of class {cls} for {k}-fold CV")
    rng = np.random.default_rng(seed)

    uniq = np.unique(subjects)
    perm = rng.permutation(len(uniq))
    ordered = uniq[perm]
    totals = np.array([(subjects == s).sum() for s in ordered])
    ordered = ordered[np.argsort(-totals, kind="stable")]

    fold_of_subject = {}
    fold_class_counts = np.zeros((k, 2), dtype=np.int64)
    for s in ordered:
        rows = subjects == s
        counts = np.array([int((labels[rows] == 0).sum()), int((labels[rows] == 1).sum())])
        major = int(np.argmax(counts))
        load = fold_class_counts[:, major] + 1e-3 * fold_class_counts.sum(axis=1)
        f = int(np.argmin(load))
        fold_of_subject[s] = f
        fold_class_counts[f] += counts
    fold_idx = np.array([fold_of_subject[s] for s in subjects], dtype=np.int64)

    ok = all(
        (fold_class_counts[f, 0] > 0) and (fold_class_counts[f, 1] > 0) for f in range(k)
    )
    if ok:
        return fold_idx, True, ()

    # Fallback: plain stratified deal, ignoring subjects.
    fold_idx = np.empty(n, dtype=np.int64)
    for cls in (0, 1):
        rows = np.flatnonzero(labels == cls)
        rows = rows[rng.permutation(len(rows))]
        fold_idx[rows] = np.arange(len(rows)) % k
    return fold_idx, False, ("subject grouping infeasible; fell back to stratified-only folds",)


def kfold_cv(
    X: np.ndarray,
    labels: np.ndarray,
    subjects,
    k: int = 10,
    seed: int = 0,
    hidden=HIDDEN_SIZES,
    config: TrainConfig | None = None,
    bpcer_targets=DEFAULT_BPCER_TARGETS,
) -> EvalReport:
    """Stratified, subject-grouped k-fold evaluation of the full recipe.

    Per fold: fit the normalizer on the training rows, train the network with
    a fold-specific seed derived from the master seed, and score the held-out
    rows.  The fold partition is verified to be disjoint and covering (and
    subject-exclusive when grouped) on every run.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    subjects = np.asarray(subjects)
    if config is None:
        config = TrainConfig(seed=seed)
    fold_idx, grouped, warnings = assign_folds(labels, subjects, k, seed)

    covered = np.zeros(len(labels), dtype=bool)
    for f in range(k):
        test = fold_idx == f
        if np.any(covered & test):
            raise AssertionError("folds overlap")
        covered |= test
        if grouped and np.intersect1d(subjects[test], subjects[~test]).size:
            raise AssertionError("a subject spans folds")
    if not covered.all():
        raise AssertionError("folds do not cover the dataset")

    fold_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]
    folds = []
    for f in range(k):
        test = fold_idx == f
        train = ~test
        stats = fit_normalizer(X[train])
        spec = NetworkSpec.for_features(X.shape[1], hidden)
        result = train_network(
            spec,
            replace(config, seed=fold_seeds[f]),
            apply_normalizer(stats, X[train]),
            labels[train],
        )
        scores = predict_proba(result.params, apply_normalizer(stats, X[test]))[:, 1]
        roc = roc_metrics(scores, labels[test])
        folds.append(
            FoldEval(
                fold=f,
                test_index=np.flatnonzero(test),
                scores=scores,
                labels=labels[test],
                roc=roc,
                apcer_at={t: roc.apcer_at(t) for t in bpcer_targets},
            )
        )
    mean_apcer = {
        t: float(np.mean([f.apcer_at[t] for f in folds])) for t in bpcer_targets
    }
    std_apcer = {
        t: float(np.std([f.apcer_at[t] for f in folds])) for t in bpcer_targets
    }
    pooled_scores = np.concatenate([f.scores for f in folds])
    pooled_labels = np.concatenate([f.labels for f in folds])
    pooled = roc_metrics(pooled_scores, pooled_labels)
    return EvalReport(
        folds=folds,
        bpcer_targets=tuple(bpcer_targets),
        mean_apcer=mean_apcer,
        std_apcer=std_apcer,
        pooled=pooled,
        grouped_by_subject=grouped,
        warnings=warnings,
    )
