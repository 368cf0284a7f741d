"""Penalty-based genetic search over tier vectors, repaired to feasibility at the end."""

from __future__ import annotations

import random
from concurrent.futures import Executor, ThreadPoolExecutor

from mcastsim.allocator.params import GAParams
from mcastsim.allocator.problem import (
    AllocationPlan,
    AllocationProblem,
    repair,
    require_lowest_feasible,
)


def _fitness(problem: AllocationProblem, scale: float, penalty: float, vec: tuple[int, ...]) -> float:
    # value normalised by total members, overload normalised by link limit: both
    # terms are O(1) and invariant under a common rescaling of rates and capacities
    return problem.value(vec) / scale - penalty * problem.relative_violation(vec)


def _evaluate_all(problem, scale, penalty, population, executor):
    if executor is None:
        return [_fitness(problem, scale, penalty, ind) for ind in population]
    # map preserves input order, so selection sees the same sequence as a serial run
    return list(executor.map(lambda ind: _fitness(problem, scale, penalty, ind), population))


def _tournament(rng: random.Random, fitness: list[float], k: int) -> int:
    best = rng.randrange(len(fitness))
    for _ in range(k - 1):
        cand = rng.randrange(len(fitness))
        if fitness[cand] > fitness[best] or (fitness[cand] == fitness[best] and cand < best):
            best = cand
    return best


def ga_allocate(
    problem: AllocationProblem,
    params: GAParams | None = None,
    seed: int = 0,
    workers: int = 1,
    executor: Executor | None = None,
) -> AllocationPlan:
    params = params or GAParams()
    require_lowest_feasible(problem)
    n = len(problem.groups)
    if n == 0:
        return {}
    if workers > 1 and executor is None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return ga_allocate(problem, params, seed, executor=pool)

    rng = random.Random(seed)
    tiers = problem.n_tiers
    p_mut = params.mutation_p if params.mutation_p is not None else 1.0 / n
    scale = max(problem.total_members(), 1)

    population = [tuple([0] * n)]
    while len(population) < params.population:
        population.append(tuple(rng.randrange(k) for k in tiers))
    fitness = _evaluate_all(problem, scale, params.penalty, population, executor)

    best_feasible, best_feasible_val = population[0], problem.value(population[0])

    def note_feasible(pop):
        nonlocal best_feasible, best_feasible_val
        for ind in pop:
            val = problem.value(ind)
            if val > best_feasible_val and problem.feasible(ind):
                best_feasible, best_feasible_val = ind, val

    note_feasible(population)
    for _ in range(params.generations):
        ranked = sorted(range(len(population)), key=lambda i: (-fitness[i], i))
        nxt = [population[i] for i in ranked[: params.elitism]]
        while len(nxt) < params.population:
            a = population[_tournament(rng, fitness, params.tournament)]
            b = population[_tournament(rng, fitness, params.tournament)]
            if rng.random() < params.crossover_p:
                mask = [rng.random() < 0.5 for _ in range(n)]
                kids = [
                    [x if m else y for x, y, m in zip(a, b, mask)],
                    [y if m else x for x, y, m in zip(a, b, mask)],
                ]
            else:
                kids = [list(a), list(b)]
            for kid in kids:
                for gi in range(n):
                    if rng.random() < p_mut:
                        kid[gi] = rng.randrange(tiers[gi])
                if len(nxt) < params.population:
                    nxt.append(tuple(kid))
        population = nxt
        fitness = _evaluate_all(problem, scale, params.penalty, population, executor)
        note_feasible(population)

    champion = population[max(range(len(population)), key=lambda i: (fitness[i], -i))]
    repaired = repair(problem, problem.to_plan(champion))
    if problem.value(problem.to_vector(repaired)) >= best_feasible_val:
        return repaired
    return problem.to_plan(best_feasible)
