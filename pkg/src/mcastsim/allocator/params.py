from __future__ import annotations

from dataclasses import dataclass

from mcastsim.errors import ConfigError


@dataclass(frozen=True)
class GAParams:
    population: int = 64
    generations: int = 50
    tournament: int = 2
    crossover_p: float = 0.5
    # None means 1 / number of groups
    mutation_p: float | None = None
    elitism: int = 1
    penalty: float = 10.0

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("ga.population must be >= 2")
        if self.generations < 0:
            raise ConfigError("ga.generations must be >= 0")
        if not 1 <= self.tournament <= self.population:
            raise ConfigError("ga.tournament must lie in [1, population]")
        if not 0.0 <= self.crossover_p <= 1.0:
            raise ConfigError("ga.crossover_p must lie in [0, 1]")
        if self.mutation_p is not None and not 0.0 <= self.mutation_p <= 1.0:
            raise ConfigError("ga.mutation_p must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ConfigError("ga.elitism must lie in [0, population)")
        if not self.penalty > 0:
            raise ConfigError("ga.penalty must be > 0")


@dataclass(frozen=True)
class SAParams:
    t0: float = 1.0
    cooling: float = 0.95
    iterations: int = 500

    def __post_init__(self):
        if not self.t0 > 0:
            raise ConfigError("sa.t0 must be > 0")
        if not 0.0 < self.cooling < 1.0:
            raise ConfigError("sa.cooling must lie in (0, 1)")
        if self.iterations < 0:
            raise ConfigError("sa.iterations must be >= 0")
