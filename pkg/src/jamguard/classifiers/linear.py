"""Linear classifiers: one-vs-rest L2 logistic regression and a one-vs-one primal hinge-loss SVM."""

import numpy as np

from .optim import minimize


def _ovr_targets(y_idx, n_classes):
    """Binary +/-1 targets, one column per sub-problem (a single one when binary)."""
    if n_classes == 2:
        return np.where(y_idx == 1, 1.0, -1.0)[:, None]
    return np.where(y_idx[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)


def _logistic_obj(theta, X, t, C):
    # 0.5 ||w||^2 + C * sum log(1 + exp(-t (Xw + b))), bias unpenalised
    w, b = theta[:-1], theta[-1]
    m = t * (X @ w + b)
    loss = 0.5 * (w @ w) + C * np.sum(np.logaddexp(0.0, -m))
    s = -t * 0.5 * (1.0 - np.tanh(0.5 * m))  # -t * sigmoid(-m)
    grad = np.empty_like(theta)
    grad[:-1] = w + C * (X.T @ s)
    grad[-1] = C * s.sum()
    return loss, grad


def fit_logistic(X, y_idx, n_classes, C, max_iter, tol):
    T = _ovr_targets(y_idx, n_classes)
    W = np.zeros((X.shape[1], T.shape[1]))
    b = np.zeros(T.shape[1])
    for j in range(T.shape[1]):
        res = minimize(
            lambda th: _logistic_obj(th, X, T[:, j], C),
            np.zeros(X.shape[1] + 1),
            max_iter=max_iter,
            tol=tol,
        )
        W[:, j] = res.x[:-1]
        b[j] = res.x[-1]
    return {"W": W, "b": b}


def _pairs(n_classes):
    return [(a, b) for a in range(n_classes) for b in range(a + 1, n_classes)]


def fit_svm(X, y_idx, n_classes, C, epochs, batch_size, rng):
    """One-vs-one linear SVMs trained jointly by mini-batch Pegasos.

    Each class pair (a, b) solves ``0.5 ||w||^2 + C * sum hinge`` over its
    own rows, with +1 for ``a`` and -1 for ``b``. All pairs share one pass
    over the data; a pair's sub-gradient is rescaled by ``n / (B * n_pair)``
    so it stays an unbiased estimate of the pair's own mean hinge loss. The
    bias rides along as a constant unit feature (regularised with the
    weights). Returns the average of the second-half iterates.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    pairs = _pairs(n_classes)
    T = np.zeros((n, len(pairs)))
    for j, (a, b) in enumerate(pairs):
        T[y_idx == a, j] = 1.0
        T[y_idx == b, j] = -1.0
    n_pair = np.abs(T).sum(axis=0)
    lam = 1.0 / (C * n_pair)
    radius = 1.0 / np.sqrt(lam)
    W = np.zeros((d + 1, len(pairs)))
    W_avg = np.zeros_like(W)
    n_avg = 0
    total = epochs * int(np.ceil(n / batch_size))
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            t += 1
            idx = order[start : start + batch_size]
            xb, tb = Xa[idx], T[idx]
            viol = (tb * (xb @ W)) < 1.0
            eta = 1.0 / (lam * t)
            scale = n / (len(idx) * n_pair)
            grad = lam * W - (xb.T @ (viol * tb)) * scale
            W -= eta * grad
            norms = np.linalg.norm(W, axis=0)
            W *= np.minimum(1.0, radius / np.maximum(norms, 1e-300))
            if t > total // 2:
                n_avg += 1
                W_avg += (W - W_avg) / n_avg
    return {"W": W_avg[:-1].copy(), "b": W_avg[-1].copy()}


def svm_predict_idx(params, X, n_classes):
    """Pairwise majority vote; vote ties go to the lowest class index."""
    s = X @ params["W"] + params["b"]
    votes = np.zeros((len(X), n_classes), dtype=int)
    for j, (a, b) in enumerate(_pairs(n_classes)):
        win_a = s[:, j] >= 0
        votes[win_a, a] += 1
        votes[~win_a, b] += 1
    return np.argmax(votes, axis=1)


def linear_decision(params, X):
    return X @ params["W"] + params["b"]


def linear_predict_idx(params, X):
    s = linear_decision(params, X)
    if s.shape[1] == 1:
        return (s[:, 0] > 0).astype(int)
    return np.argmax(s, axis=1)  # first maximum -> lowest class index
