"""Fully connected network with softmax output, trained on cross-entropy."""

import numpy as np

from .optim import minimize

ACTIVATIONS = ("logistic", "tanh", "relu")


def _act(name, z):
    if name == "logistic":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation {name!r}")


def _act_deriv(name, a):
    # derivative expressed through the activation output
    if name == "logistic":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    return (a > 0).astype(float)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def layer_shapes(n_in, hidden, n_out):
    sizes = [n_in, *hidden, n_out]
    return list(zip(sizes[:-1], sizes[1:]))


def pack(weights, biases):
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(weights, biases)])


def unpack(theta, shapes):
    weights, biases = [], []
    i = 0
    for fan_in, fan_out in shapes:
        w = theta[i : i + fan_in * fan_out].reshape(fan_in, fan_out)
        i += fan_in * fan_out
        b = theta[i : i + fan_out]
        i += fan_out
        weights.append(w)
        biases.append(b)
    return weights, biases


def init_params(shapes, activation, rng):
    """Glorot-uniform init; logistic units get the usual sqrt(2) wider range."""
    factor = 2.0 if activation == "logistic" else 1.0
    weights, biases = [], []
    for fan_in, fan_out in shapes:
        bound = np.sqrt(factor * 6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, fan_out))
    return pack(weights, biases)


def forward(X, weights, biases, activation):
    acts = [X]
    a = X
    for w, b in zip(weights[:-1], biases[:-1]):
        a = _act(activation, a @ w + b)
        acts.append(a)
    return acts, _softmax(a @ weights[-1] + biases[-1])


def loss_and_grad(theta, X, Y, shapes, activation, alpha):
    """Mean cross-entropy plus ``alpha / (2 n) * ||W||^2`` and its gradient.

    ``Y`` is one-hot, shape (n, n_classes).
    """
    n = X.shape[0]
    weights, biases = unpack(theta, shapes)
    acts, prob = forward(X, weights, biases, activation)
    loss = -np.sum(Y * np.log(np.clip(prob, 1e-300, None))) / n
    loss += 0.5 * alpha / n * sum(np.sum(w * w) for w in weights)

    delta = (prob - Y) / n
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        gw[layer] = acts[layer].T @ delta + alpha / n * weights[layer]
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * _act_deriv(activation, acts[layer])
    return loss, pack(gw, gb)


def fit_mlp(X, y_idx, n_classes, hidden, activation, alpha, max_iter, tol, solver, rng):
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    shapes = layer_shapes(X.shape[1], hidden, n_classes)
    Y = np.eye(n_classes)[y_idx]
    theta0 = init_params(shapes, activation, rng)
    res = minimize(
        lambda t: loss_and_grad(t, X, Y, shapes, activation, alpha),
        theta0,
        max_iter=max_iter,
        tol=tol,
        solver=solver,
    )
    weights, biases = unpack(res.x, shapes)
    return {
        **{f"W{i}": w for i, w in enumerate(weights)},
        **{f"b{i}": b for i, b in enumerate(biases)},
    }, res


def mlp_scores(params, X, activation):
    n_layers = sum(1 for k in params if k.startswith("W"))
    weights = [params[f"W{i}"] for i in range(n_layers)]
    biases = [params[f"b{i}"] for i in range(n_layers)]
    return forward(X, weights, biases, activation)[1]
