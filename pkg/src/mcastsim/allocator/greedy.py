from __future__ import annotations

import math

from mcastsim.allocator.problem import AllocationPlan, AllocationProblem, require_lowest_feasible

# strictly-better threshold for local moves, in value units
MIN_GAIN = 1e-12


def _ratio_phase(problem: AllocationProblem) -> list[int]:
    n = len(problem.groups)
    vec = [0] * n
    load = problem.loads(vec)
    blocked = [problem.n_tiers[gi] == 1 for gi in range(n)]
    while True:
        best_gi, best_ratio = None, -math.inf
        for gi in range(n):
            if blocked[gi]:
                continue
            t = vec[gi]
            links = problem.group_links[gi]
            extra = problem.rates[gi][t + 1] - problem.rates[gi][t]
            if not all(problem.fits(li, load[li] + extra) for li in links):
                blocked[gi] = True
                continue
            gain = problem.values[gi][t + 1] - problem.values[gi][t]
            cost = extra * len(links)
            ratio = math.inf if cost == 0 else gain / cost
            if ratio > best_ratio:
                best_gi, best_ratio = gi, ratio
        if best_gi is None:
            return vec
        t = vec[best_gi]
        extra = problem.rates[best_gi][t + 1] - problem.rates[best_gi][t]
        for li in problem.group_links[best_gi]:
            load[li] += extra
        vec[best_gi] = t + 1
        if vec[best_gi] == problem.n_tiers[best_gi] - 1:
            blocked[best_gi] = True


def _move_fits(problem, vec, load, changes):
    delta: dict[int, float] = {}
    for gi, t in changes:
        d = problem.rates[gi][t] - problem.rates[gi][vec[gi]]
        for li in problem.group_links[gi]:
            delta[li] = delta.get(li, 0.0) + d
    return all(problem.fits(li, load[li] + d) for li, d in delta.items()), delta


def _improve(problem: AllocationProblem, vec: list[int]) -> list[int]:
    """Best-improvement local search over re-tiering one group or trading tiers between two."""
    n = len(vec)
    load = problem.loads(vec)
    values, n_tiers = problem.values, problem.n_tiers
    while True:
        best, best_gain = None, MIN_GAIN
        for a in range(n):
            va = values[a][vec[a]]
            for ta in range(n_tiers[a]):
                if ta == vec[a]:
                    continue
                ga = values[a][ta] - va
                if ga > best_gain and _move_fits(problem, vec, load, ((a, ta),))[0]:
                    best, best_gain = ((a, ta),), ga
                if ta > vec[a]:
                    continue
                # free bandwidth on a, spend it on b
                for b in range(n):
                    if b == a:
                        continue
                    vb = values[b][vec[b]]
                    for tb in range(vec[b] + 1, n_tiers[b]):
                        g = ga + values[b][tb] - vb
                        if g > best_gain and _move_fits(problem, vec, load, ((a, ta), (b, tb)))[0]:
                            best, best_gain = ((a, ta), (b, tb)), g
        if best is None:
            return vec
        _, delta = _move_fits(problem, vec, load, best)
        for li, d in delta.items():
            load[li] += d
        for gi, t in best:
            vec[gi] = t


def greedy_allocate(problem: AllocationProblem, improve: bool = True) -> AllocationPlan:
    """Best value-per-bit single-tier upgrades from the all-lowest plan, then local repair of the ordering.

    The cost of an upgrade is the extra rate times the number of links in the
    group's tree. Ties go to the lower group id; infeasible upgrades are
    skipped, and since loads only grow they stay infeasible.

    With ``improve`` the construction is followed by best-improvement local
    search: set one group to any tier, or lower one group and raise another,
    whenever that strictly raises value and stays feasible. Moves are scanned
    in group/tier order, so the first of equally good moves wins.
    """
    require_lowest_feasible(problem)
    vec = _ratio_phase(problem)
    if improve:
        vec = _improve(problem, vec)
    return problem.to_plan(vec)
