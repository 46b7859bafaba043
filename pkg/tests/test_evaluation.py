import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jamguard.classifiers import ClassifierSpec, fit
from jamguard.evaluation import (
    EvaluationError,
    binary_report,
    confusion_matrix,
    evaluate_binary,
    evaluate_multiclass,
    experiment_seeds,
    run_experiment,
    time_model,
)


def test_binary_hand_counts():
    y_true = np.array([1] * 10 + [0] * 10)
    y_pred = np.array([1] * 9 + [0] + [0] * 8 + [1] * 2)
    r = binary_report(y_true, y_pred)
    assert (r.tp, r.fn, r.tn, r.fp) == (9, 1, 8, 2)
    assert r.accuracy == pytest.approx(0.85)
    assert r.tp_rate == pytest.approx(0.9)
    assert r.tn_rate == pytest.approx(0.8)


def test_binary_trivial_cases():
    y = np.array([0, 1] * 10)
    perfect = binary_report(y, y)
    assert (perfect.accuracy, perfect.tp_rate, perfect.tn_rate) == (1.0, 1.0, 1.0)
    const = binary_report(y, np.zeros_like(y))
    assert (const.accuracy, const.tp_rate, const.tn_rate) == (0.5, 0.0, 1.0)
    with pytest.raises(EvaluationError):
        binary_report(np.ones(5), np.ones(5))


@given(
    y=st.lists(st.integers(0, 1), min_size=4, max_size=60).filter(lambda v: 0 < sum(v) < len(v)),
    data=st.data(),
)
def test_binary_permutation_invariant(y, data):
    y = np.array(y)
    pred = np.array(data.draw(st.lists(st.integers(0, 1), min_size=len(y), max_size=len(y))))
    perm = np.array(data.draw(st.permutations(range(len(y)))))
    assert binary_report(y, pred) == binary_report(y[perm], pred[perm])
    r = binary_report(y, pred)
    assert r.accuracy == pytest.approx((r.tp + r.tn) / len(y))
    assert 0 <= r.tp_rate <= 1 and 0 <= r.tn_rate <= 1


def test_confusion_three_class_hand_table():
    y_true = [0, 0, 0, 1, 1, 2, 2, 2, 2]
    y_pred = [0, 1, 0, 1, 2, 2, 2, 0, 2]
    cm = confusion_matrix(y_true, y_pred, labels=[0, 1, 2])
    expected = np.array([[2, 1, 0], [0, 1, 1], [1, 0, 3]])
    assert np.array_equal(cm.matrix, expected)
    assert cm.accuracy == pytest.approx(6 / 9)
    assert cm.tp_rates() == pytest.approx([2 / 3, 1 / 2, 3 / 4])
    assert cm.support.tolist() == [3, 2, 4]


def test_confusion_trivial_predictors():
    y = np.array([0, 1, 2, 2, 1, 0, 0])
    assert np.array_equal(confusion_matrix(y, y).matrix, np.diag([3, 2, 2]))
    cm = confusion_matrix(y, np.zeros_like(y), labels=[0, 1, 2])
    assert cm.matrix[:, 1:].sum() == 0
    assert cm.accuracy == pytest.approx(3 / 7)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=80))
def test_confusion_invariants(pairs):
    t, p = np.array(pairs).T
    cm = confusion_matrix(t, p, labels=range(5))
    assert np.array_equal(cm.support, np.bincount(t, minlength=5))
    assert cm.accuracy == np.trace(cm.matrix) / len(t)
    assert cm.accuracy == np.mean(t == p)


def test_confusion_errors():
    with pytest.raises(EvaluationError):
        confusion_matrix([], [])
    with pytest.raises(EvaluationError):
        confusion_matrix([0, 3], [0, 1], labels=[0, 1])


def test_evaluate_helpers(det_50, loc_ds):
    model = fit(ClassifierSpec("knn"), *det_50.train())
    r = evaluate_binary(model, *det_50.test())
    assert r.tp + r.tn + r.fp + r.fn == len(det_50.test_idx)
    m = fit(ClassifierSpec("nb"), *loc_ds.train())
    cm = evaluate_multiclass(m, *loc_ds.test())
    assert cm.matrix.shape == (33, 33)


def test_run_experiment_single_seed_std_zero(det_50):
    r = run_experiment(ClassifierSpec("knn"), det_50, n_seeds=1)
    assert all(v == 0.0 for v in r.std.values())
    assert r.mean == r.runs[0]


def test_run_experiment_reproducible(det_50):
    a = run_experiment(ClassifierSpec("dt"), det_50, n_seeds=3, master_seed=9)
    b = run_experiment(ClassifierSpec("dt"), det_50, n_seeds=3, master_seed=9)
    assert a.to_dict() == b.to_dict()
    assert experiment_seeds(9, 3) == a.seeds
    c = run_experiment(ClassifierSpec("dt"), det_50, n_seeds=3, master_seed=10)
    assert c.seeds != a.seeds


def test_run_experiment_localization_keys(loc_ds):
    r = run_experiment(ClassifierSpec("nb"), loc_ds, n_seeds=1)
    assert set(r.mean) == {"accuracy"} | {f"tp_class_{c}" for c in range(33)}


def test_run_experiment_errors(det_50):
    with pytest.raises(EvaluationError):
        run_experiment(ClassifierSpec("nb"), det_50, n_seeds=0)


def test_beats_coin_flip(det_50):
    # 0.5 + 3 sigma of a fair coin on the 285-row test split
    bound = 0.5 + 3 * np.sqrt(0.25 / len(det_50.test_idx))
    for kind in ("svm", "lr", "knn", "dt"):
        r = run_experiment(ClassifierSpec(kind), det_50, n_seeds=2)
        assert r.mean["accuracy"] > bound, kind


def test_time_model(det_50):
    Xtr, ytr = det_50.train()
    Xte, _ = det_50.test()
    rep = time_model(ClassifierSpec("lr"), Xtr, ytr, Xte, repetitions=3)
    assert rep.train_ms_per_1000 > 0 and rep.inference_ms_per_1000 > 0
    assert rep.inferences_per_second > 0
    with pytest.raises(EvaluationError):
        time_model(ClassifierSpec("lr"), Xtr, ytr, Xte, repetitions=2)
