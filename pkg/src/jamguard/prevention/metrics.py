"""Probability estimators, the lifetime security metric, and reconfiguration counts."""

from __future__ import annotations

import numpy as np


def estimate_probabilities(stats):
    """Return ``(p_j, p_c)``; ``p_c`` is None when no reallocation ever happened.

    p_j: jammed intervals over all intervals of authorized lightpaths.
    p_c: reallocation instances where the lightpath was exposed both just
    before and just after the move, over all reallocation instances.
    """
    total = stats.total_intervals
    if total == 0:
        raise ValueError("no authorized lightpath intervals recorded")
    p_j = stats.total_jammed / total
    inst = stats.total_instances
    p_c = stats.total_continued / inst if inst else None
    return p_j, p_c


def security_metric(p_j, p_a, p_c, tau_c, tau_r):
    """Probability that an authorized lightpath's data escapes jamming.

    ``1 - p_j (1 + r p_a p_c) / (1 + r p_a)`` with ``r = tau_c / tau_r``.
    A missing ``p_c`` (no reallocations observed) uses the ``p_a = 0`` form.
    """
    for name, v in (("p_j", p_j), ("p_a", p_a)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if tau_c <= 0 or tau_r <= 0:
        raise ValueError("tau_c and tau_r must be > 0")
    if p_c is None:
        return 1.0 - p_j
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must lie in [0, 1]")
    r = tau_c / tau_r
    # same value as the closed form, written so small r does not cancel
    ra = r * p_a
    return (1.0 - p_j) + p_j * ra * (1.0 - p_c) / (1.0 + ra)


def reconfiguration_report(stats):
    """Reconfigurations per detection query, with and without successful detection.

    ``per_detection`` averages moved lightpaths over every control event
    (detection query), so it scales with ``p_a``; ``per_executed`` averages
    over the events that actually reallocated. ``fraction`` is moved over
    active authorized lightpaths, averaged over control events.
    """
    c = stats.control
    if len(c) == 0:
        raise ValueError("no detection events recorded")
    executed = c[:, 0].astype(bool)
    if not executed.any():
        raise ValueError("no detection-triggered reallocation recorded")
    moved = c[:, 3].astype(float)
    active = np.maximum(c[:, 4], 1)
    return {
        "p_a": stats.params.p_a,
        "p_l": stats.params.p_l,
        "control_events": int(len(c)),
        "executed_events": int(executed.sum()),
        "localized_events": int((executed & c[:, 1].astype(bool)).sum()),
        "per_detection": float(moved.mean()),
        "per_executed": float(moved[executed].mean()),
        "targeted_per_detection": float(c[:, 2].mean()),
        "fraction": float((moved / active).mean()),
        "mean_active_authorized": float(c[:, 4].mean()),
    }
