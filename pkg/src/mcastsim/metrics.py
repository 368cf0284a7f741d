"""Session QoE scoring, bandwidth utilization and baseline-vs-proposed comparison."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from mcastsim.errors import ConfigError, StateError


@dataclass(frozen=True)
class QoEWeights:
    quality: float = 1.0
    rebuffer: float = 2.0
    switch: float = 0.5
    startup: float = 0.2
    startup_cap_s: float = 5.0

    def __post_init__(self):
        for name in ("quality", "rebuffer", "switch", "startup"):
            if getattr(self, name) < 0:
                raise ConfigError(f"qoe.{name} must be >= 0")
        if not self.startup_cap_s > 0:
            raise ConfigError("qoe.startup_cap_s must be > 0")


@dataclass(frozen=True)
class SessionTrace:
    quality_trace: Sequence[float]
    rebuffer_s: float
    startup_delay_s: float
    watched_s: float


def session_qoe(trace: SessionTrace, weights: QoEWeights = QoEWeights()) -> float:
    """Score one viewing session on a 0-100 scale.

    Mean segment quality, minus penalties for the stall ratio, the mean
    absolute quality change between consecutive segments, and the capped
    startup delay.
    """
    if not trace.watched_s > 0:
        raise StateError(f"watched_s must be > 0, got {trace.watched_s}")
    q = list(trace.quality_trace)
    mean_q = sum(q) / len(q) if q else 0.0
    switches = (
        sum(abs(b - a) for a, b in zip(q, q[1:])) / (len(q) - 1) if len(q) >= 2 else 0.0
    )
    startup = min(trace.startup_delay_s, weights.startup_cap_s) / weights.startup_cap_s
    raw = (
        weights.quality * mean_q
        - weights.rebuffer * (trace.rebuffer_s / trace.watched_s)
        - weights.switch * switches
        - weights.startup * startup
    )
    return min(100.0, max(0.0, 100.0 * raw))


def bandwidth_utilization(
    loads: Mapping[str, Sequence[float]], capacities: Mapping[str, Sequence[float]]
) -> float:
    """Capacity-weighted mean utilization (%) with per-sample loads clipped at capacity."""
    if set(loads) != set(capacities):
        raise StateError("loads and capacities cover different links")
    used = total = 0.0
    n = 0
    for lid in sorted(capacities):
        cap, load = capacities[lid], loads[lid]
        if len(cap) != len(load):
            raise StateError(f"link {lid}: {len(load)} load samples vs {len(cap)} capacity samples")
        for x, c in zip(load, cap):
            used += min(x, c)
            total += c
            n += 1
    if n == 0 or total <= 0:
        raise StateError("empty run: no link samples")
    return 100.0 * used / total


def offered_load_pct(loads: Mapping[str, Sequence[float]], capacities: Mapping[str, Sequence[float]]) -> float:
    """Like ``bandwidth_utilization`` but unclipped, so oversubscription shows above 100."""
    used = sum(sum(v) for v in loads.values())
    total = sum(sum(v) for v in capacities.values())
    if total <= 0:
        raise StateError("empty run: no link samples")
    return 100.0 * used / total


def percentile(values: Sequence[float], pct: float) -> float:
    """Linear-interpolated percentile; 0 for an empty sample."""
    xs = sorted(values)
    if not xs:
        return 0.0
    pos = (len(xs) - 1) * pct / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


@dataclass
class MetricsSummary:
    scenario: str
    demand: str
    method: str
    optimizer: str
    seed: int
    sessions: int = 0
    completed_sessions: int = 0
    qoe_mean: float = 0.0
    qoe_p10: float = 0.0
    qoe_p50: float = 0.0
    qoe_p90: float = 0.0
    mean_quality: float = 0.0
    bandwidth_utilization_pct: float = 0.0
    offered_load_pct: float = 0.0
    mean_startup_delay_s: float = 0.0
    rebuffer_ratio: float = 0.0
    rebuffer_events_per_min: float = 0.0
    ticks: int = 0
    # in-memory time series (tick index aligned); never serialized into the summary
    series: dict = field(default_factory=dict, repr=False, compare=False)

    def scalars(self) -> dict:
        d = asdict(self)
        d.pop("series")
        return d


COMPARED_METRICS = (
    "qoe_mean",
    "bandwidth_utilization_pct",
    "mean_startup_delay_s",
    "rebuffer_ratio",
    "mean_quality",
)


class ComparisonRow(NamedTuple):
    metric: str
    traditional: float
    proposed: float
    improvement_pct: float | None


def improvement(traditional: float, proposed: float) -> float | None:
    """Relative change in percent, rounded to one decimal; None when the baseline is 0."""
    if traditional == 0:
        return None
    return round(100.0 * (proposed - traditional) / traditional, 1)


def compare(traditional: MetricsSummary, proposed: MetricsSummary) -> list[ComparisonRow]:
    if traditional.seed != proposed.seed:
        raise ConfigError(
            f"refusing to compare runs with different seeds ({traditional.seed} vs {proposed.seed})"
        )
    if traditional.scenario != proposed.scenario:
        raise ConfigError(
            f"refusing to compare different scenarios ({traditional.scenario!r} vs {proposed.scenario!r})"
        )
    rows = []
    for name in COMPARED_METRICS:
        t, p = getattr(traditional, name), getattr(proposed, name)
        rows.append(ComparisonRow(name, t, p, improvement(t, p)))
    return rows
