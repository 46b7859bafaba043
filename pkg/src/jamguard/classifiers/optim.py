"""Limited-memory BFGS with a strong-Wolfe line search, plus an Adam fallback."""

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    converged: bool
    method: str


class LineSearchError(RuntimeError):
    pass


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimiser of the cubic interpolating (a, fa, ga) and (b, fb, gb)."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2)
    return t if np.isfinite(t) else None


def strong_wolfe(fg, x, f0, g0, d, step=1.0, c1=1e-4, c2=0.9, max_iter=25):
    """Nocedal & Wright line search (algorithms 3.5/3.6).

    Returns (step, f, g) satisfying the strong Wolfe conditions.
    """
    dg0 = g0 @ d
    if dg0 >= 0:
        raise LineSearchError("not a descent direction")

    def phi(a):
        f, g = fg(x + a * d)
        return f, g, g @ d

    def zoom(lo, f_lo, dg_lo, hi, f_hi, dg_hi):
        for _ in range(max_iter):
            a = _cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi)
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1 * (right - left)
            if a is None or not left + margin <= a <= right - margin:
                a = 0.5 * (lo + hi)
            f, g, dg = phi(a)
            if f > f0 + c1 * a * dg0 or f >= f_lo:
                hi, f_hi, dg_hi = a, f, dg
            else:
                if abs(dg) <= -c2 * dg0:
                    return a, f, g
                if dg * (hi - lo) >= 0:
                    hi, f_hi, dg_hi = lo, f_lo, dg_lo
                lo, f_lo, dg_lo = a, f, dg
            if abs(hi - lo) < 1e-16:
                break
        if f_lo < f0:
            f, g, _ = phi(lo)
            return lo, f, g
        raise LineSearchError("zoom failed")

    a_prev, f_prev, dg_prev = 0.0, f0, dg0
    a = step
    for i in range(max_iter):
        f, g, dg = phi(a)
        if not np.isfinite(f):
            a = 0.5 * (a_prev + a)
            continue
        if f > f0 + c1 * a * dg0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, dg_prev, a, f, dg)
        if abs(dg) <= -c2 * dg0:
            return a, f, g
        if dg >= 0:
            return zoom(a, f, dg, a_prev, f_prev, dg_prev)
        a_prev, f_prev, dg_prev = a, f, dg
        a = 2.0 * a
    raise LineSearchError("bracketing failed")


def lbfgs(fg, x0, max_iter=500, tol=1e-5, history=10):
    """Minimise ``fg`` (returning value and gradient) from ``x0``.

    Stops when the max-norm of the gradient drops below ``tol``. If even a
    steepest-descent step fails the line search, returns the current iterate
    with method ``"lbfgs-stalled"``.
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    mem = deque(maxlen=history)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= tol:
            return OptimResult(x, f, float(np.max(np.abs(g))), it - 1, True, "lbfgs")
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(mem):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if mem:
            s, y, _ = mem[-1]
            q *= (s @ y) / (y @ y)
        else:
            q /= max(1.0, np.linalg.norm(g))
        for (s, y, rho), a in zip(mem, reversed(alphas)):
            b = rho * (y @ q)
            q += s * (a - b)
        d = -q
        try:
            step, f_new, g_new = strong_wolfe(fg, x, f, g, d)
        except LineSearchError:
            mem.clear()
            d = -g / max(1.0, np.linalg.norm(g))
            try:
                step, f_new, g_new = strong_wolfe(fg, x, f, g, d)
            except LineSearchError:
                return OptimResult(x, f, float(np.max(np.abs(g))), it, False, "lbfgs-stalled")
        s = step * d
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            mem.append((s, y, 1.0 / sy))
        x = x + s
        converged_f = abs(f - f_new) <= 1e-14 * max(1.0, abs(f))
        f, g = f_new, g_new
        if converged_f and np.max(np.abs(g)) > tol:
            # no measurable progress left at machine precision
            return OptimResult(x, f, float(np.max(np.abs(g))), it, False, "lbfgs")
    gn = float(np.max(np.abs(g)))
    return OptimResult(x, f, gn, it, gn <= tol, "lbfgs")


def adam(fg, x0, max_iter=2000, tol=1e-5, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8):
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    f, g = fg(x)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= tol:
            break
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**it)
        vhat = v / (1 - beta2**it)
        x = x - lr * mhat / (np.sqrt(vhat) + eps)
        f, g = fg(x)
    gn = float(np.max(np.abs(g)))
    return OptimResult(x, f, gn, it, gn <= tol, "adam")


def minimize(fg, x0, max_iter=500, tol=1e-5, solver="lbfgs"):
    """L-BFGS first; Adam takes over from the last iterate if the line search breaks down."""
    if solver == "adam":
        return adam(fg, x0, max_iter=max_iter, tol=tol)
    if solver != "lbfgs":
        raise ValueError(f"unknown solver {solver!r}")
    res = lbfgs(fg, x0, max_iter=max_iter, tol=tol)
    if res.method == "lbfgs-stalled" and res.n_iter < max_iter:
        res = adam(fg, res.x, max_iter=max_iter - res.n_iter, tol=tol)
    return res
