"""The allocation problem: one tier per multicast group under per-link capacity.

Value is the member-weighted quality sum. A plan is feasible when, on every
link, the summed stream rates (FEC overhead included) of the groups whose trees
cross it stay within ``headroom * predicted capacity``. Plans are plain
``{group_id: tier}`` dicts.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from mcastsim.content import BitrateLadder
from mcastsim.errors import InfeasibleError, OracleError, StateError

AllocationPlan = dict  # group id -> tier index

# relative slack on the capacity test that absorbs float summation noise
FEAS_RTOL = 1e-12


@dataclass(frozen=True)
class GroupDemand:
    group_id: str
    member_count: int
    ladder: BitrateLadder
    tree_links: frozenset[str]
    fec_fraction: float = 0.0


class AllocationProblem:
    """Immutable problem instance with precomputed per-group rate/value tables."""

    def __init__(
        self,
        groups: Iterable[GroupDemand],
        capacities: Mapping[str, float],
        headroom: float = 0.95,
    ):
        if not 0.0 < headroom <= 1.0:
            raise ValueError(f"headroom must lie in (0, 1], got {headroom}")
        self.groups: tuple[GroupDemand, ...] = tuple(sorted(groups, key=lambda g: g.group_id))
        ids = [g.group_id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise StateError("duplicate group id in allocation problem")
        self.headroom = headroom
        self.capacities = dict(capacities)
        used = sorted({lid for g in self.groups for lid in g.tree_links})
        for lid in used:
            if lid not in self.capacities:
                raise StateError(f"no predicted capacity for link {lid!r}")
        self.link_ids: tuple[str, ...] = tuple(used)
        self.limits: tuple[float, ...] = tuple(headroom * self.capacities[lid] for lid in used)
        index = {lid: i for i, lid in enumerate(used)}
        self.group_index = {gid: i for i, gid in enumerate(ids)}
        self.group_links: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(index[lid] for lid in g.tree_links)) for g in self.groups
        )
        self.rates: tuple[tuple[float, ...], ...] = tuple(
            tuple(t.bitrate_bps * (1.0 + g.fec_fraction) for t in g.ladder.tiers) for g in self.groups
        )
        self.values: tuple[tuple[float, ...], ...] = tuple(
            tuple(g.member_count * t.quality for t in g.ladder.tiers) for g in self.groups
        )
        self.n_tiers: tuple[int, ...] = tuple(len(g.ladder) for g in self.groups)
        # each group's lowest tier must fit on an otherwise empty network
        for gi, g in enumerate(self.groups):
            for li in self.group_links[gi]:
                if self.rates[gi][0] > self.limits[li] * (1 + FEAS_RTOL):
                    raise InfeasibleError(
                        f"group {g.group_id!r}: lowest tier alone exceeds link {used[li]!r}"
                    )

    @property
    def group_ids(self) -> tuple[str, ...]:
        return tuple(g.group_id for g in self.groups)

    # vector helpers used by the solvers; tiers are lists aligned with self.groups

    def to_vector(self, plan: Mapping[str, int]) -> list[int]:
        if set(plan) != set(self.group_index):
            extra = sorted(set(plan) - set(self.group_index))
            missing = sorted(set(self.group_index) - set(plan))
            raise StateError(f"malformed plan: unknown groups {extra}, missing groups {missing}")
        vec = [plan[gid] for gid in self.group_ids]
        for gi, t in enumerate(vec):
            if not isinstance(t, int) or not 0 <= t < self.n_tiers[gi]:
                raise StateError(f"malformed plan: tier {t!r} invalid for group {self.group_ids[gi]!r}")
        return vec

    def to_plan(self, vec: Sequence[int]) -> AllocationPlan:
        return {gid: int(t) for gid, t in zip(self.group_ids, vec)}

    def loads(self, vec: Sequence[int]) -> list[float]:
        load = [0.0] * len(self.link_ids)
        for gi, t in enumerate(vec):
            r = self.rates[gi][t]
            for li in self.group_links[gi]:
                load[li] += r
        return load

    def value(self, vec: Sequence[int]) -> float:
        return sum(self.values[gi][t] for gi, t in enumerate(vec))

    def fits(self, li: int, load: float) -> bool:
        return load <= self.limits[li] * (1 + FEAS_RTOL)

    def violations(self, load: Sequence[float]) -> list[float]:
        return [0.0 if self.fits(li, x) else x - self.limits[li] for li, x in enumerate(load)]

    def feasible(self, vec: Sequence[int]) -> bool:
        return all(self.fits(li, x) for li, x in enumerate(self.loads(vec)))

    def relative_violation(self, vec: Sequence[int]) -> float:
        """Largest overload as a fraction of the link's allowed load (scale-free)."""
        v = self.violations(self.loads(vec))
        return max((x / self.limits[li] for li, x in enumerate(v)), default=0.0)

    def total_members(self) -> int:
        return sum(g.member_count for g in self.groups)


def evaluate(problem: AllocationProblem, plan: Mapping[str, int]) -> tuple[float, float]:
    """Return ``(value, max per-link violation in bits/s)``."""
    vec = problem.to_vector(plan)
    load = problem.loads(vec)
    return problem.value(vec), max(problem.violations(load), default=0.0)


def lowest_plan(problem: AllocationProblem) -> AllocationPlan:
    return {gid: 0 for gid in problem.group_ids}


def require_lowest_feasible(problem: AllocationProblem) -> None:
    if not problem.feasible([0] * len(problem.groups)):
        raise InfeasibleError("even the all-lowest plan violates a link capacity")


def repair(problem: AllocationProblem, plan: Mapping[str, int]) -> AllocationPlan:
    """Downgrade one tier at a time until feasible.

    Each step targets the most-violated link and lowers the group on it whose
    downgrade frees the most bandwidth (ties to the lower group id).
    """
    vec = problem.to_vector(plan)
    load = problem.loads(vec)
    while True:
        viol = problem.violations(load)
        worst = max(range(len(viol)), key=lambda i: (viol[i], -i), default=None)
        if worst is None or viol[worst] <= 0:
            return problem.to_plan(vec)
        best_gi, best_drop = None, 0.0
        for gi, links in enumerate(problem.group_links):
            t = vec[gi]
            if worst not in links or t == 0:
                continue
            drop = problem.rates[gi][t] - problem.rates[gi][t - 1]
            if drop > best_drop:
                best_gi, best_drop = gi, drop
        if best_gi is None:
            raise InfeasibleError(f"link {problem.link_ids[worst]!r} overloaded at all-lowest tiers")
        t = vec[best_gi]
        delta = problem.rates[best_gi][t - 1] - problem.rates[best_gi][t]
        for li in problem.group_links[best_gi]:
            load[li] += delta
        vec[best_gi] = t - 1


def exhaustive_allocate(problem: AllocationProblem, guard: int = 10**6) -> AllocationPlan:
    """Enumerate every plan; max value, ties to the lexicographically smallest tier vector."""
    size = math.prod(problem.n_tiers)
    if size > guard:
        raise OracleError(f"search space {size} exceeds guard {guard}")
    best_vec, best_val = None, -math.inf
    for vec in itertools.product(*(range(n) for n in problem.n_tiers)):
        val = problem.value(vec)
        if val > best_val and problem.feasible(vec):
            best_vec, best_val = vec, val
    if best_vec is None:
        raise InfeasibleError("no feasible plan exists")
    return problem.to_plan(best_vec)
