"""Feedback guardrails, FEC sizing and the static baseline."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

from mcastsim.allocator.problem import AllocationPlan, AllocationProblem, repair

EPS = 1e-9


def fec_fraction(observed_loss: float, fec_cap: float = 0.3, gain: float = 2.0) -> float:
    """Redundancy sized at ``gain`` times the observed loss, capped."""
    return min(gain * max(observed_loss, 0.0), fec_cap)


def traditional_allocate(problem) -> AllocationPlan:
    """Every group at its top tier; no prediction, feedback or feasibility check.

    Accepts an ``AllocationProblem`` or a ``{group_id: ladder}`` mapping.
    """
    if isinstance(problem, AllocationProblem):
        return {g.group_id: g.ladder.top for g in problem.groups}
    return {gid: ladder.top for gid, ladder in sorted(problem.items())}


def adapt_quality(
    plan: Mapping[str, int],
    feedback: Mapping[str, Sequence],
    previous: Mapping[str, int],
    problem: AllocationProblem,
    low_water_s: float = 1.0,
    safety: float = 0.8,
) -> AllocationPlan:
    """Apply per-group guardrails to an optimizer plan.

    (a) a playing or stalled member below the low-water buffer mark caps the
    group one tier under its previous tier (startup buffers are low by design); (b) the group bitrate may not exceed ``safety`` times the
    smallest predicted goodput among warm members; (c) tiers move at most one
    step per epoch. Any plan left infeasible by smoothing is then repaired.
    ``feedback`` maps group id to that group's member reports.
    """
    out = {}
    for g in problem.groups:
        gid = g.group_id
        t = plan[gid]
        prev = previous.get(gid)
        if prev is not None:
            prev = min(prev, g.ladder.top)
        reports = feedback.get(gid, ())
        if prev is not None and any(
            r.buffer_s < low_water_s - EPS for r in reports if getattr(r, "phase", "playing") != "startup"
        ):
            t = min(t, max(prev - 1, 0))
        warm = [r.predicted_goodput_bps for r in reports if not r.cold_start]
        if warm:
            limit = safety * min(warm)
            while t > 0 and g.ladder.bitrate(t) > limit:
                t -= 1
        if prev is not None:
            t = min(max(t, prev - 1), prev + 1)
        out[gid] = t
    if not problem.feasible(problem.to_vector(out)):
        out = repair(problem, out)
    return out
