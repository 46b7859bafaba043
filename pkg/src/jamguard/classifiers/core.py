from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .bayes import fit_gaussian_nb, nb_predict_idx
from .linear import fit_logistic, fit_svm, linear_predict_idx, svm_predict_idx
from .mlp import fit_mlp, mlp_scores
from .neighbors import knn_predict_idx
from .tree import fit_tree, tree_predict_idx

KINDS = ("ann", "svm", "lr", "knn", "dt", "nb")
STANDARDIZED = frozenset({"ann", "svm", "lr"})
MODEL_FORMAT_VERSION = 1

DEFAULTS = {
    "ann": {
        "hidden": [64],
        "activation": "logistic",
        "alpha": 1e-4,
        "max_iter": 500,
        "tol": 1e-5,
        "solver": "lbfgs",
    },
    "svm": {"C": 1.0, "epochs": 100, "batch_size": 16},
    "lr": {"C": 0.1, "max_iter": 500, "tol": 1e-5},
    "knn": {"k": 1},
    "dt": {"max_depth": None, "min_samples_split": 2},
    "nb": {"var_floor": 1e-9},
}

# ANN variants for the 33-class task; "wide" is the default
LOCALIZATION_ANN = {
    "wide": {"hidden": [20], "activation": "logistic"},
    "two-layer": {"hidden": [64, 64], "activation": "tanh"},
    "deep": {"hidden": [32] * 20, "activation": "tanh"},
}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown classifier kind {self.kind!r}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ModelError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        hp = self.hyperparameters
        if self.kind == "knn" and hp["k"] < 1:
            raise ModelError("k must be >= 1")
        if self.kind in ("lr", "svm") and hp["C"] <= 0:
            raise ModelError("C must be > 0")
        if self.kind == "ann" and any(h < 1 for h in hp["hidden"]):
            raise ModelError("hidden layer sizes must be >= 1")

    @property
    def hyperparameters(self) -> dict:
        return {**DEFAULTS[self.kind], **self.params}

    @classmethod
    def default(cls, kind, task="detection", ann_variant="wide"):
        if kind == "ann" and task == "localization":
            return cls(kind, dict(LOCALIZATION_ANN[ann_variant]))
        return cls(kind)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    hyperparameters: dict
    params: dict
    classes: np.ndarray
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return int(self.params["_n_features"])

    def transform(self, X):
        if self.mean is None:
            return X
        return (X - self.mean) / self.scale


def _check_features(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ModelError("features must be a 2-D array")
    if not np.all(np.isfinite(X)):
        raise ModelError("features contain non-finite values")
    return X


def fit(spec: ClassifierSpec, X, y, seed=0) -> TrainedModel:
    """Train a classifier of ``spec.kind`` on rows ``X`` with labels ``y``."""
    X = _check_features(X)
    y = np.asarray(y)
    if len(X) == 0 or len(X) != len(y):
        raise ModelError("training set is empty or labels do not match rows")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ModelError("training set contains a single class")
    n_classes = len(classes)
    hp = spec.hyperparameters
    rng = np.random.default_rng(seed)

    mean = scale = None
    Xt = X
    if spec.kind in STANDARDIZED:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        Xt = (X - mean) / scale

    if spec.kind == "ann":
        params, _ = fit_mlp(
            Xt, y_idx, n_classes, tuple(hp["hidden"]), hp["activation"], hp["alpha"],
            hp["max_iter"], hp["tol"], hp["solver"], rng,
        )
    elif spec.kind == "lr":
        params = fit_logistic(Xt, y_idx, n_classes, hp["C"], hp["max_iter"], hp["tol"])
    elif spec.kind == "svm":
        params = fit_svm(Xt, y_idx, n_classes, hp["C"], hp["epochs"], hp["batch_size"], rng)
    elif spec.kind == "knn":
        params = {"X": X.copy(), "y": y_idx.astype(int)}
    elif spec.kind == "dt":
        params = fit_tree(X, y_idx, n_classes, hp["max_depth"], hp["min_samples_split"])
    else:
        params = fit_gaussian_nb(X, y_idx, n_classes, hp["var_floor"])
    params["_n_features"] = np.array(X.shape[1])
    return TrainedModel(spec.kind, hp, params, classes, mean, scale)


def _predict_idx(model: TrainedModel, X):
    Xt = model.transform(X)
    p, hp = model.params, model.hyperparameters
    if model.kind == "ann":
        return np.argmax(mlp_scores(p, Xt, hp["activation"]), axis=1)
    if model.kind == "lr":
        return linear_predict_idx(p, Xt)
    if model.kind == "svm":
        return svm_predict_idx(p, Xt, len(model.classes))
    if model.kind == "knn":
        return knn_predict_idx(p["X"], p["y"], len(model.classes), Xt, hp["k"])
    if model.kind == "dt":
        return tree_predict_idx(p, Xt)
    return nb_predict_idx(p, Xt)


def _as_rows(model, features):
    X = _check_features(np.atleast_2d(np.asarray(features, dtype=float)))
    if X.shape[1] != model.n_features:
        raise ModelError(f"expected {model.n_features} features, got {X.shape[1]}")
    return X


def predict(model: TrainedModel, features):
    """Label of a single feature vector."""
    X = _as_rows(model, features)
    if X.shape[0] != 1:
        raise ModelError("predict takes one feature vector; use predict_batch")
    return model.classes[_predict_idx(model, X)[0]].item()


def predict_batch(model: TrainedModel, features_list):
    """Labels for many rows plus the wall-clock seconds spent predicting."""
    X = _as_rows(model, features_list)
    t0 = time.perf_counter()
    labels = model.classes[_predict_idx(model, X)]
    elapsed = time.perf_counter() - t0
    return labels, elapsed


# -- serialisation --------------------------------------------------------------


def _encode(a):
    a = np.asarray(a)
    return {"dtype": str(a.dtype), "shape": list(a.shape), "data": a.ravel().tolist()}


def _decode(d):
    return np.array(d["data"], dtype=d["dtype"]).reshape(d["shape"])


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": "jamguard-model",
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "hyperparameters": model.hyperparameters,
        "classes": _encode(model.classes),
        "standardization": None
        if model.mean is None
        else {"mean": _encode(model.mean), "scale": _encode(model.scale)},
        "params": {k: _encode(v) for k, v in model.params.items()},
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != "jamguard-model":
        raise ModelError("not a jamguard model document")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {doc.get('version')}")
    std = doc["standardization"]
    return TrainedModel(
        kind=doc["kind"],
        hyperparameters=doc["hyperparameters"],
        params={k: _decode(v) for k, v in doc["params"].items()},
        classes=_decode(doc["classes"]),
        mean=None if std is None else _decode(std["mean"]),
        scale=None if std is None else _decode(std["scale"]),
    )


def save_model(model: TrainedModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
