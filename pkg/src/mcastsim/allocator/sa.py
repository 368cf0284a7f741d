from __future__ import annotations

import math
import random

from mcastsim.allocator.greedy import greedy_allocate
from mcastsim.allocator.params import SAParams
from mcastsim.allocator.problem import AllocationPlan, AllocationProblem


def sa_allocate(problem: AllocationProblem, params: SAParams | None = None, seed: int = 0) -> AllocationPlan:
    """Simulated annealing started from the greedy plan; returns the best feasible plan seen.

    A move shifts one random group up or down a tier. Infeasible or
    out-of-range moves are rejected outright; a move losing ``d`` value is
    accepted with probability ``exp(-d / T)``, ``T = t0 * cooling**i``.
    """
    params = params or SAParams()
    start = greedy_allocate(problem)
    n = len(problem.groups)
    if n == 0:
        return start
    rng = random.Random(seed)
    cur = problem.to_vector(start)
    load = problem.loads(cur)
    cur_val = problem.value(cur)
    best, best_val = list(cur), cur_val
    temp = params.t0
    for _ in range(params.iterations):
        gi = rng.randrange(n)
        step = 1 if rng.random() < 0.5 else -1
        t_old = cur[gi]
        t_new = t_old + step
        if 0 <= t_new < problem.n_tiers[gi]:
            delta_load = problem.rates[gi][t_new] - problem.rates[gi][t_old]
            links = problem.group_links[gi]
            if all(problem.fits(li, load[li] + delta_load) for li in links):
                loss = problem.values[gi][t_old] - problem.values[gi][t_new]
                if loss <= 0 or rng.random() < math.exp(-loss / temp):
                    cur[gi] = t_new
                    for li in links:
                        load[li] += delta_load
                    cur_val -= loss
                    if cur_val > best_val:
                        # recompute to keep the incumbent's value free of drift
                        best, best_val = list(cur), problem.value(cur)
                        cur_val = best_val
        temp *= params.cooling
    if not problem.feasible(best):
        # incremental load drift pushed the incumbent over a limit; greedy is safe
        return start
    return problem.to_plan(best)
