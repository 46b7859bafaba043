"""Metrics, seed-averaged experiments and timing for the detectors."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .classifiers import ClassifierSpec, fit, predict_batch


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class BinaryReport:
    accuracy: float
    tp_rate: float
    tn_rate: float
    tp: int
    tn: int
    fp: int
    fn: int

    def metrics(self):
        return {"accuracy": self.accuracy, "tp_rate": self.tp_rate, "tn_rate": self.tn_rate}


def binary_report(y_true, y_pred) -> BinaryReport:
    """Counts with jamming (label 1) as the positive class."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    pos = y_true == 1
    neg = y_true == 0
    if not pos.any() or not neg.any():
        raise EvaluationError("test set must contain both classes")
    tp = int(np.sum(pos & (y_pred == 1)))
    fn = int(np.sum(pos & (y_pred != 1)))
    tn = int(np.sum(neg & (y_pred == 0)))
    fp = int(np.sum(neg & (y_pred != 0)))
    return BinaryReport(
        accuracy=(tp + tn) / (tp + tn + fp + fn),
        tp_rate=tp / (tp + fn),
        tn_rate=tn / (tn + fp),
        tp=tp, tn=tn, fp=fp, fn=fn,
    )


def evaluate_binary(model, X, y) -> BinaryReport:
    pred, _ = predict_batch(model, X)
    return binary_report(y, pred)


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple
    matrix: np.ndarray  # rows: true class, columns: predicted class

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.matrix) / self.matrix.sum())

    @property
    def support(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def tp_rates(self) -> np.ndarray:
        """Per-class recall; NaN for classes absent from the test set."""
        s = self.support
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(s > 0, np.diag(self.matrix) / np.where(s > 0, s, 1), np.nan)


def confusion_matrix(y_true, y_pred, labels=None) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise EvaluationError("empty test set")
    if labels is None:
        labels = np.union1d(y_true, y_pred)
    labels = tuple(int(v) for v in labels)
    pos = {v: i for i, v in enumerate(labels)}
    missing = (set(np.unique(y_true)) | set(np.unique(y_pred))) - set(pos)
    if missing:
        raise EvaluationError(f"labels {sorted(missing)} not in label set")
    m = np.zeros((len(labels), len(labels)), dtype=int)
    np.add.at(m, ([pos[v] for v in y_true], [pos[v] for v in y_pred]), 1)
    return ConfusionMatrix(labels, m)


def evaluate_multiclass(model, X, y, labels=None) -> ConfusionMatrix:
    pred, _ = predict_batch(model, X)
    if labels is None:
        labels = np.union1d(model.classes, y)
    return confusion_matrix(y, pred, labels)


# -- seed-averaged runs -------------------------------------------------------------


@dataclass
class ExperimentResult:
    kind: str
    task: str
    seeds: list
    runs: list  # per-seed metric dicts
    mean: dict
    std: dict

    def to_dict(self):
        return {
            "kind": self.kind,
            "task": self.task,
            "seeds": [int(s) for s in self.seeds],
            "mean": self.mean,
            "std": self.std,
            "runs": self.runs,
        }


def experiment_seeds(master_seed, n_seeds):
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(n_seeds)]


def _aggregate(runs):
    keys = runs[0].keys()
    mean = {k: float(np.mean([r[k] for r in runs])) for k in keys}
    std = {k: float(np.std([r[k] for r in runs])) for k in keys}
    return mean, std


def run_experiment(spec: ClassifierSpec, dataset, n_seeds=20, master_seed=0, feature_mode=None):
    """Re-split ``dataset`` once per seed, fit, evaluate; return mean and std.

    The same generated data is reused for every seed. Binary tasks report
    accuracy/TP/TN rates; localization reports accuracy plus the TP rate of
    every class in the dataset.
    """
    if n_seeds < 1:
        raise EvaluationError("n_seeds must be >= 1")
    X = dataset.features(feature_mode)
    y = dataset.y
    labels = np.unique(y)
    seeds = experiment_seeds(master_seed, n_seeds)
    runs = []
    for s in seeds:
        d = dataset.resplit(s)
        try:
            model = fit(spec, X[d.train_idx], y[d.train_idx], seed=s)
        except ValueError as exc:
            raise EvaluationError(f"fit failed for seed {s}: {exc}") from exc
        Xte, yte = X[d.test_idx], y[d.test_idx]
        if dataset.task == "detection":
            runs.append(evaluate_binary(model, Xte, yte).metrics())
        else:
            cm = evaluate_multiclass(model, Xte, yte, labels)
            row = {"accuracy": cm.accuracy}
            row.update({f"tp_class_{c}": float(r) for c, r in zip(cm.labels, cm.tp_rates())})
            runs.append(row)
    mean, std = _aggregate(runs)
    return ExperimentResult(spec.kind, dataset.task, seeds, runs, mean, std)


# -- timing ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimingReport:
    train_ms_per_1000: float
    inference_ms_per_1000: float
    inferences_per_second: float

    def to_dict(self):
        return asdict(self)


def time_model(spec: ClassifierSpec, X_train, y_train, X_test, repetitions=5, seed=0):
    """Median wall-clock fit and batch-predict times after one warm-up run."""
    if repetitions < 3:
        raise EvaluationError("repetitions must be >= 3")
    model = fit(spec, X_train, y_train, seed=seed)
    predict_batch(model, X_test)
    fit_s, pred_s = [], []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        model = fit(spec, X_train, y_train, seed=seed)
        fit_s.append(time.perf_counter() - t0)
        _, elapsed = predict_batch(model, X_test)
        pred_s.append(elapsed)
    fit_med = statistics.median(fit_s)
    pred_med = max(statistics.median(pred_s), 1e-9)
    return TimingReport(
        train_ms_per_1000=fit_med / len(X_train) * 1e6,
        inference_ms_per_1000=pred_med / len(X_test) * 1e6,
        inferences_per_second=len(X_test) / pred_med,
    )
