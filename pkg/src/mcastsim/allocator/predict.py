"""Capacity and goodput predictors fed by link monitoring and client feedback."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence


def ewma(samples: Sequence[float], alpha: float) -> float:
    """``p <- alpha*x + (1-alpha)*p`` over ``samples``, seeded with the first one."""
    it = iter(samples)
    p = float(next(it))
    for x in it:
        p = alpha * x + (1.0 - alpha) * p
    return p


def predict_capacity(
    history: Mapping[str, Sequence[float]],
    alpha: float = 0.3,
    nominal: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """Per-link EWMA of effective-capacity samples; links without samples fall back to nominal."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    out = {}
    for lid in sorted(set(history) | set(nominal or {})):
        samples = history.get(lid, ())
        if samples:
            out[lid] = ewma(samples, alpha)
        else:
            out[lid] = nominal[lid]
    return out


def predict_client_goodput(samples: Sequence[float], window: int = 5) -> float:
    """Harmonic mean of the last ``window`` goodput samples; 0 on cold start."""
    recent = list(samples)[-window:]
    if not recent:
        return 0.0
    if any(x <= 0 for x in recent):
        return 0.0
    inv = sum(1.0 / x for x in recent)
    return math.inf if inv == 0 else len(recent) / inv
