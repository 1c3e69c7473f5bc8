import numpy as np
import pytest

from padpipe.classifier import (
    NetworkSpec,
    PlateauScheduler,
    TrainConfig,
    apply_normalizer,
    assign_folds,
    fit_normalizer,
    init_params,
    kfold_cv,
    load_model,
    loss_and_grads,
    ModelBundle,
    predict,
    predict_proba,
    roc_metrics,
    save_model,
    train_network,
)
from padpipe.errors import LayoutMismatch, MetricsUndefined


# ---------------------------------------------------------------------------
# Normalizer


def test_normalizer_hand_values():
    X = np.array([[1.0], [2.0], [3.0]])
    stats = fit_normalizer(X)
    assert stats.mean[0] == pytest.approx(2.0)
    assert stats.std[0] == pytest.approx(np.sqrt(2.0 / 3.0))  # population std 0.8165
    normed = apply_normalizer(stats, X)
    assert np.allclose(normed.ravel(), [-1.224744871, 0.0, 1.224744871])


def test_normalizer_already_standard():
    X = np.array([[-1.0], [0.0], [1.0]]) * np.sqrt(1.5)
    stats = fit_normalizer(X)
    assert np.allclose(apply_normalizer(stats, X), X, atol=1e-9)


def test_normalizer_constant_column_floored():
    X = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    stats = fit_normalizer(X)
    assert stats.floored == (0,)
    normed = apply_normalizer(stats, X)
    assert np.allclose(normed[:, 0], 0.0)


def test_normalizer_post_property(rng):
    X = rng.normal(size=(50, 7)) * rng.uniform(0.5, 20, size=7) + rng.normal(size=7)
    stats = fit_normalizer(X)
    normed = apply_normalizer(stats, X)
    assert np.allclose(normed.mean(axis=0), 0.0, atol=1e-9)
    assert np.allclose(normed.var(axis=0), 1.0, atol=1e-6)


# ---------------------------------------------------------------------------
# Network training


def test_gradients_match_finite_differences(rng):
    spec = NetworkSpec(layer_sizes=(5, 6, 4, 2))
    params = init_params(spec, rng)
    X = rng.normal(size=(7, 5))
    y = rng.integers(0, 2, size=7)
    _, grads = loss_and_grads(params, X, y)
    h = 1e-5
    worst = 0.0
    for li in range(len(params)):
        for which in (0, 1):
            arr = params[li][which]
            g = grads[li][which]
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = arr[ix]
                arr[ix] = orig + h
                lp, _ = loss_and_grads(params, X, y)
                arr[ix] = orig - h
                lm, _ = loss_and_grads(params, X, y)
                arr[ix] = orig
                num = (lp - lm) / (2 * h)
                worst = max(worst, abs(num - g[ix]) / max(abs(num) + abs(g[ix]), 1e-8))
    assert worst < 1e-4


def test_toy_separable_reaches_high_accuracy(rng):
    X0 = rng.normal(loc=(-2.0, 0.0), scale=0.5, size=(100, 2))
    X1 = rng.normal(loc=(2.0, 0.0), scale=0.5, size=(100, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * 100 + [1] * 100)
    res = train_network(NetworkSpec((2, 16, 16, 2)), TrainConfig(seed=5, batch_size=32), X, y)
    acc = (predict_proba(res.params, X).argmax(axis=1) == y).mean()
    assert acc >= 0.99


def test_single_example_overfits_monotonically():
    X = np.array([[0.3, -1.2, 0.5]])
    y = np.array([1])
    res = train_network(
        NetworkSpec((3, 8, 8, 2)), TrainConfig(seed=2, batch_size=1, epochs=800), X, y
    )
    tr = res.loss_trace
    assert tr[-1] < 1e-2
    assert all(b <= a + 1e-12 for a, b in zip(tr, tr[1:]))


def test_training_deterministic_given_seed(rng):
    X = rng.normal(size=(40, 4))
    y = rng.integers(0, 2, size=40)
    conf = TrainConfig(seed=11, epochs=5, batch_size=16)
    r1 = train_network(NetworkSpec((4, 8, 8, 2)), conf, X, y)
    r2 = train_network(NetworkSpec((4, 8, 8, 2)), conf, X, y)
    for (W1, b1), (W2, b2) in zip(r1.params, r2.params):
        assert np.array_equal(W1, W2)
        assert np.array_equal(b1, b2)


def test_xavier_uniform_bounds(rng):
    spec = NetworkSpec((100, 50, 2))
    params = init_params(spec, rng)
    W1, b1 = params[0]
    limit = np.sqrt(6.0 / 150.0)
    assert np.all(np.abs(W1) <= limit)
    assert np.all(b1 == 0.0)


# ---------------------------------------------------------------------------
# Plateau scheduler


def test_plateau_fires_after_patience_stale_epochs():
    sched = PlateauScheduler(lr0=0.001, factor=0.1, patience=3, min_delta=1e-6)
    sched.step(1.0)  # best
    sched.step(0.5)  # improves
    for _ in range(2):
        sched.step(0.5)  # stale x2
    assert sched.lr == pytest.approx(0.001)
    sched.step(0.5)  # stale x3 -> reduce
    assert sched.lr == pytest.approx(0.0001)
    assert sched.trace[-1] == pytest.approx(0.0001)


def test_plateau_requires_improvement_beyond_min_delta():
    sched = PlateauScheduler(lr0=0.001, factor=0.1, patience=2, min_delta=1e-6)
    sched.step(1.0)
    sched.step(1.0 - 5e-7)  # within min_delta: stale
    sched.step(1.0 - 8e-7)  # still stale -> reduce
    assert sched.lr == pytest.approx(0.0001)


def test_plateau_steps_are_exact_factor_powers():
    sched = PlateauScheduler(lr0=0.001, factor=0.1, patience=1, min_delta=1e-6)
    for _ in range(3):
        sched.step(1.0)
    assert sched.trace == pytest.approx([0.001, 0.0001, 1e-05])


# ---------------------------------------------------------------------------
# Prediction


def test_predict_zero_weight_network_scores_half():
    spec = NetworkSpec((4, 3, 2))
    params = [(np.zeros((4, 3)), np.zeros(3)), (np.zeros((3, 2)), np.zeros(2))]
    probs = predict_proba(params, np.ones((5, 4)))
    assert np.all(probs == 0.5)


def test_predict_duplicated_rows_identical(rng):
    spec = NetworkSpec((4, 8, 2))
    params = init_params(spec, rng)
    row = rng.normal(size=(1, 4))
    X = np.vstack([row, row, row])
    scores = predict_proba(params, X)[:, 1]
    assert scores[0] == scores[1] == scores[2]


def test_predict_monotone_on_separable_toy(rng):
    X0 = rng.normal(loc=(-2.0, 0.0), scale=0.5, size=(60, 2))
    X1 = rng.normal(loc=(2.0, 0.0), scale=0.5, size=(60, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * 60 + [1] * 60)
    res = train_network(NetworkSpec((2, 8, 8, 2)), TrainConfig(seed=3, batch_size=16), X, y)
    scores = predict_proba(res.params, X)[:, 1]
    assert np.median(scores[y == 1]) > np.max(np.percentile(scores[y == 0], 50))


def test_probabilities_sum_to_one(rng):
    params = init_params(NetworkSpec((6, 9, 2)), rng)
    probs = predict_proba(params, rng.normal(size=(20, 6)))
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.all((probs >= 0) & (probs <= 1))


# ---------------------------------------------------------------------------
# Model bundle round trip


def _tiny_bundle(rng):
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, size=30)
    stats = fit_normalizer(X)
    spec = NetworkSpec((4, 6, 2))
    res = train_network(spec, TrainConfig(seed=1, epochs=3, batch_size=8), apply_normalizer(stats, X), y)
    names = ("a", "b", "c", "d")
    from padpipe.layout import layout_hash

    return ModelBundle(
        spec=spec,
        config=TrainConfig(seed=1, epochs=3, batch_size=8),
        stats=stats,
        params=res.params,
        layout_hash=layout_hash(names),
        feature_names=names,
        lr_trace=res.lr_trace,
    ), X


def test_model_roundtrip_bit_identical(tmp_path, rng):
    bundle, X = _tiny_bundle(rng)
    p1 = tmp_path / "m1.bin"
    p2 = tmp_path / "m2.bin"
    save_model(bundle, p1, "deadbeef")
    save_model(load_model(p1), p2, "deadbeef")
    assert p1.read_bytes() == p2.read_bytes()
    loaded = load_model(p1)
    assert np.array_equal(predict(loaded, X), predict(bundle, X))


def test_model_layout_mismatch_is_hard_error(tmp_path, rng):
    bundle, X = _tiny_bundle(rng)
    with pytest.raises(LayoutMismatch):
        predict(bundle, X, layout_hash="0000000000000000")
    # wrong width is also fatal
    with pytest.raises(LayoutMismatch):
        predict(bundle, np.zeros((2, 5)))


# ---------------------------------------------------------------------------
# ROC metrics


def test_roc_separated_scores():
    scores = np.array([0.1, 0.2, 0.8, 0.9])
    labels = np.array([0, 0, 1, 1])
    roc = roc_metrics(scores, labels)
    assert roc.apcer_at(0.01) == pytest.approx(0.0)
    assert roc.auc() == pytest.approx(1.0)


def test_roc_all_equal_scores():
    scores = np.full(6, 0.5)
    labels = np.array([0, 0, 0, 1, 1, 1])
    roc = roc_metrics(scores, labels)
    assert roc.apcer_at(0.0) == pytest.approx(1.0)


def test_roc_single_class_raises():
    with pytest.raises(MetricsUndefined):
        roc_metrics(np.array([0.1, 0.9]), np.array([1, 1]))


def _oracle_roc(scores, labels):
    live = [s for s, l in zip(scores, labels) if l == 0]
    spoof = [s for s, l in zip(scores, labels) if l == 1]
    thresholds = sorted(set(scores)) + [float("inf")]
    pts = []
    for t in thresholds:
        bpcer = sum(s >= t for s in live) / len(live)
        apcer = sum(s < t for s in spoof) / len(spoof)
        pts.append((t, bpcer, apcer))
    return pts


def _oracle_apcer_at(pts, target):
    best = {}
    for _, b, a in pts:
        best[b] = min(best.get(b, 2.0), a)
    xs = sorted(best)
    ys = [best[x] for x in xs]
    if target <= xs[0]:
        return ys[0]
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if x0 <= target <= x1:
            if x1 == x0:
                return min(y0, y1)
            w = (target - x0) / (x1 - x0)
            return y0 + w * (y1 - y0)
    return ys[-1]


def test_roc_matches_exhaustive_oracle(rng):
    for trial in range(40):
        n = int(rng.integers(4, 50))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.random(n), 3)  # coarse grid forces score ties
        roc = roc_metrics(scores, labels)
        pts = _oracle_roc(scores.tolist(), labels.tolist())
        assert len(pts) == len(roc.thresholds)
        for (t, b, a), tt, bb, aa in zip(pts, roc.thresholds, roc.bpcer, roc.apcer):
            assert t == tt and b == pytest.approx(bb) and a == pytest.approx(aa)
        for target in (0.0, 0.002, 0.01, 0.1, 0.5):
            assert roc.apcer_at(target) == pytest.approx(
                _oracle_apcer_at(pts, target), abs=1e-12
            ), f"trial {trial} target {target}"


def test_roc_hand_set_matches_oracle():
    scores = np.array([0.1, 0.4, 0.6, 0.5, 0.7, 0.9])
    labels = np.array([0, 0, 0, 1, 1, 1])
    roc = roc_metrics(scores, labels)
    pts = _oracle_roc(scores.tolist(), labels.tolist())
    for (t, b, a), tt, bb, aa in zip(pts, roc.thresholds, roc.bpcer, roc.apcer):
        assert b == pytest.approx(bb) and a == pytest.approx(aa)


def test_roc_invariant_under_increasing_transform(rng):
    scores = rng.random(40)
    labels = rng.integers(0, 2, size=40)
    labels[:2] = (0, 1)
    roc1 = roc_metrics(scores, labels)
    roc2 = roc_metrics(np.exp(3.0 * scores) - 0.5, labels)
    assert np.allclose(roc1.bpcer, roc2.bpcer)
    assert np.allclose(roc1.apcer, roc2.apcer)
    assert roc1.auc() == pytest.approx(roc2.auc())


def test_roc_monotone(rng):
    scores = rng.random(60)
    labels = rng.integers(0, 2, size=60)
    labels[:2] = (0, 1)
    roc = roc_metrics(scores, labels)
    assert np.all(np.diff(roc.bpcer) <= 0)
    assert np.all(np.diff(roc.apcer) >= 0)


# ---------------------------------------------------------------------------
# K-fold CV


def _grouped_dataset(rng, n_subjects=20, rows_per_subject=5):
    rows = []
    labels = []
    subjects = []
    for s in range(n_subjects):
        cls = s % 2
        for _ in range(rows_per_subject):
            center = (-1.5, 0.0) if cls == 0 else (1.5, 0.0)
            rows.append(rng.normal(loc=center, scale=0.6, size=2))
            labels.append(cls)
            subjects.append(f"subj{s:03d}")
    return np.asarray(rows), np.asarray(labels), np.asarray(subjects)


def test_fold_partition_properties(rng):
    X, labels, subjects = _grouped_dataset(rng)
    fold_idx, grouped, warnings = assign_folds(labels, subjects, k=10, seed=3)
    assert grouped and not warnings
    assert len(fold_idx) == 100
    sizes = np.bincount(fold_idx, minlength=10)
    assert sizes.sum() == 100
    assert sizes.min() >= 5  # ~10 each with grouping slack
    for f in range(10):
        test_subjects = set(subjects[fold_idx == f])
        train_subjects = set(subjects[fold_idx != f])
        assert not test_subjects & train_subjects


def test_fold_assignment_deterministic(rng):
    X, labels, subjects = _grouped_dataset(rng)
    a1, _, _ = assign_folds(labels, subjects, k=5, seed=9)
    a2, _, _ = assign_folds(labels, subjects, k=5, seed=9)
    assert np.array_equal(a1, a2)
    a3, _, _ = assign_folds(labels, subjects, k=5, seed=10)
    assert not np.array_equal(a1, a3)  # seed matters


def test_fold_fallback_when_one_subject_dominates():
    labels = np.array([0] * 30 + [1] * 30)
    subjects = np.array(["big"] * 30 + [f"s{i}" for i in range(30)])
    fold_idx, grouped, warnings = assign_folds(labels, subjects, k=5, seed=1)
    assert not grouped
    assert warnings
    for f in range(5):
        fold_labels = labels[fold_idx == f]
        assert (fold_labels == 0).any() and (fold_labels == 1).any()


def test_kfold_perfect_scorer_yields_zero_apcer(rng):
    X, labels, subjects = _grouped_dataset(rng, n_subjects=20, rows_per_subject=5)
    conf = TrainConfig(seed=0, epochs=30, batch_size=16)
    report = kfold_cv(X, labels, subjects, k=5, seed=4, hidden=(16, 16), config=conf)
    assert report.mean_apcer[0.01] <= 0.05
    union = np.concatenate([f.test_index for f in report.folds])
    assert sorted(union.tolist()) == list(range(len(labels)))


def test_kfold_rerun_identical(rng):
    X, labels, subjects = _grouped_dataset(rng, n_subjects=12, rows_per_subject=4)
    conf = TrainConfig(seed=0, epochs=4, batch_size=16)
    r1 = kfold_cv(X, labels, subjects, k=4, seed=2, hidden=(8, 8), config=conf)
    r2 = kfold_cv(X, labels, subjects, k=4, seed=2, hidden=(8, 8), config=conf)
    for f1, f2 in zip(r1.folds, r2.folds):
        assert np.array_equal(f1.test_index, f2.test_index)
        assert np.array_equal(f1.scores, f2.scores)
