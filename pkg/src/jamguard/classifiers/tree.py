"""CART decision tree grown on Gini impurity, stored as flat node arrays."""

import numpy as np


def _gini_from_counts(counts):
    n = counts.sum(axis=-1, keepdims=True)
    p = counts / np.where(n == 0, 1, n)
    return 1.0 - np.sum(p * p, axis=-1)


def _best_split(X, y_idx, n_classes):
    """Return (feature, threshold, gain) of the best split, or None.

    Scans features in index order and keeps the first strictly best one.
    """
    n, d = X.shape
    parent = np.bincount(y_idx, minlength=n_classes).astype(float)
    parent_gini = _gini_from_counts(parent)
    best = None
    best_gain = 0.0
    onehot = np.eye(n_classes)[y_idx]
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = parent - left
        nl = np.arange(1, n, dtype=float)
        child = (nl * _gini_from_counts(left) + (n - nl) * _gini_from_counts(right)) / n
        gain = np.where(valid, parent_gini - child, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain + 1e-12:
            best_gain = float(gain[i])
            best = (f, 0.5 * (xs[i] + xs[i + 1]), best_gain)
    return best


def fit_tree(X, y_idx, n_classes, max_depth=None, min_samples_split=2):
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(rows, depth):
        node = len(feature)
        counts = np.bincount(y_idx[rows], minlength=n_classes)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts)
        pure = np.count_nonzero(counts) == 1
        if pure or len(rows) < min_samples_split or (max_depth is not None and depth >= max_depth):
            return node
        split = _best_split(X[rows], y_idx[rows], n_classes)
        if split is None:
            return node
        f, thr, _ = split
        go_left = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(rows[go_left], depth + 1)
        right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return {
        "feature": np.array(feature, dtype=int),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=int),
        "right": np.array(right, dtype=int),
        "value": np.array(value, dtype=float),
    }


def tree_leaves(params, X):
    feature, threshold = params["feature"], params["threshold"]
    left, right = params["left"], params["right"]
    node = np.zeros(len(X), dtype=int)
    active = feature[node] >= 0
    while active.any():
        idx = np.nonzero(active)[0]
        f = feature[node[idx]]
        go_left = X[idx, f] <= threshold[node[idx]]
        node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
        active = feature[node] >= 0
    return node


def tree_predict_idx(params, X):
    return np.argmax(params["value"][tree_leaves(params, X)], axis=1)
