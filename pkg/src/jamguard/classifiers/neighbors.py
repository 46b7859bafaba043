import numpy as np


def knn_predict_idx(X_train, y_idx, n_classes, X, k, chunk=512):
    """Majority vote over the ``k`` nearest training rows (Euclidean).

    Equidistant neighbours are ordered by class index, and vote ties go to
    the lowest class index.
    """
    k = min(k, len(X_train))
    out = np.empty(len(X), dtype=int)
    for start in range(0, len(X), chunk):
        xb = X[start : start + chunk]
        d = ((xb[:, None, :] - X_train[None, :, :]) ** 2).sum(axis=2)
        for i in range(len(xb)):
            order = np.lexsort((y_idx, d[i]))[:k]
            votes = np.bincount(y_idx[order], minlength=n_classes)
            out[start + i] = int(np.argmax(votes))
    return out
