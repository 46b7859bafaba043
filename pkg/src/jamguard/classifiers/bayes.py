import numpy as np


def fit_gaussian_nb(X, y_idx, n_classes, var_floor=1e-9):
    """Per-class feature means/variances and class priors.

    Columns are sorted before reduction so the result does not depend on
    the order of training rows, down to the last bit. ``var_floor`` is
    scaled by the largest feature variance and added to every variance.
    """
    d = X.shape[1]
    theta = np.zeros((n_classes, d))
    var = np.zeros((n_classes, d))
    counts = np.bincount(y_idx, minlength=n_classes)
    for c in range(n_classes):
        xc = np.sort(X[y_idx == c], axis=0)
        theta[c] = xc.mean(axis=0)
        var[c] = ((xc - theta[c]) ** 2).mean(axis=0)
    xs = np.sort(X, axis=0)
    eps = var_floor * np.max(((xs - xs.mean(axis=0)) ** 2).mean(axis=0))
    var = var + max(eps, var_floor)
    return {"theta": theta, "var": var, "log_prior": np.log(counts / counts.sum())}


def nb_log_posterior(params, X):
    theta, var = params["theta"], params["var"]
    ll = -0.5 * np.sum(np.log(2.0 * np.pi * var), axis=1)[None, :]
    ll = ll - 0.5 * np.sum((X[:, None, :] - theta[None]) ** 2 / var[None], axis=2)
    return ll + params["log_prior"][None, :]


def nb_predict_idx(params, X):
    return np.argmax(nb_log_posterior(params, X), axis=1)
