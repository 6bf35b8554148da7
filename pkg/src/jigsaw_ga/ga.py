"""Genetic-algorithm solver loop.

Individuals are complete arrangements. Fitness is the sum of pairwise
dissimilarities over all horizontally and vertically abutting edges of
the grid, so lower is better and zero is a perfect pixel match of every
seam. Each generation copies the best few individuals unchanged and
fills the rest with children produced by kernel-growing crossover of
roulette-selected parents.

Reproducibility does not depend on thread scheduling: every child slot
of every generation draws from its own generator, seeded by spawn key
(generation, slot) off the master seed, and pre-draws all variates it
may need before assembly starts.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compat import CompatCache
from .crossover import crossover_grid, draw_budget
from .puzzle import Arrangement, PuzzleDims, PuzzleError

_SELECTION_FLOOR = 0.01  # fraction of the fitness spread kept as minimum weight


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 1000
    generations: int = 100
    elitism: int = 4
    mutation_rate: float = 0.05
    seed: int = 0
    jobs: int = 1
    engine: str = "fast"

    def __post_init__(self):
        if self.population_size < 1:
            raise PuzzleError(f"population_size must be >= 1, got {self.population_size}")
        if not 0 <= self.elitism <= self.population_size:
            raise PuzzleError(
                f"elitism must be in [0, population_size], got {self.elitism}"
            )
        if self.generations < 0:
            raise PuzzleError(f"generations must be >= 0, got {self.generations}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise PuzzleError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")
        if self.jobs < 1:
            raise PuzzleError(f"jobs must be >= 1, got {self.jobs}")


@dataclass(frozen=True)
class GenerationStats:
    """Population summary after one generation; generation 0 is the
    random initial population."""

    generation: int
    best_fitness: float
    worst_fitness: float
    mean_fitness: float
    elapsed_ms: float


@dataclass
class GaResult:
    best: Arrangement
    best_fitness: float
    history: list[GenerationStats] = field(default_factory=list)


def fitness_of_population(grids: np.ndarray, cache: CompatCache) -> np.ndarray:
    """Fitness of a (n, N, M) stack of grids, shape (n,) float64."""
    g = np.asarray(grids)
    if g.ndim != 3:
        raise PuzzleError(f"expected a (n, N, M) stack, got shape {g.shape}")
    right = cache.d_right[g[:, :, :-1], g[:, :, 1:]].sum(axis=(1, 2))
    down = cache.d_down[g[:, :-1, :], g[:, 1:, :]].sum(axis=(1, 2))
    return right + down


def fitness_of_grid(grid: np.ndarray, cache: CompatCache) -> float:
    return float(fitness_of_population(np.asarray(grid)[None], cache)[0])


def fitness(arrangement: Arrangement, cache: CompatCache) -> float:
    """Total pairwise dissimilarity over all adjacent pairs; lower is better."""
    return fitness_of_grid(arrangement.grid, cache)


def selection_weights(fitnesses: np.ndarray) -> np.ndarray:
    """Roulette weights: linear in fitness deficit, floored above zero.

    The floor keeps the worst individual selectable and makes a fully
    uniform population draw uniformly instead of dividing by zero.
    """
    f = np.asarray(fitnesses, dtype=np.float64)
    spread = f.max() - f.min()
    return (f.max() - f) + _SELECTION_FLOOR * (spread + 1.0)


def roulette_pick(cum_weights: np.ndarray, u: float) -> int:
    """Index drawn proportionally to weights, from one uniform variate."""
    total = cum_weights[-1]
    idx = int(np.searchsorted(cum_weights, u * total, side="right"))
    return min(idx, len(cum_weights) - 1)


def _random_population(n: int, piece_count: int, rows: int, cols: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    pop = np.empty((n, rows, cols), dtype=np.int32)
    for i in range(n):
        pop[i] = rng.permutation(piece_count).reshape(rows, cols).astype(np.int32)
    return pop


def run(
    cache: CompatCache,
    dims: PuzzleDims,
    config: GaConfig | None = None,
    observer=None,
) -> GaResult:
    """Solve one puzzle; returns the best arrangement ever seen.

    ``observer``, when given, is called as ``observer(stats, best_grid)``
    after every generation, including the initial one.
    """
    config = config or GaConfig()
    if cache.piece_count != dims.piece_count:
        raise PuzzleError(
            f"cache holds {cache.piece_count} pieces but dims expect {dims.piece_count}"
        )
    p = dims.piece_count
    rows, cols = dims.rows, dims.cols
    n_draws = 2 + draw_budget(p)  # two parent picks, then the child's own budget

    started = time.perf_counter()
    population = _random_population(config.population_size, p, rows, cols, config.seed)
    fitness = fitness_of_population(population, cache)

    best_idx = int(np.argmin(fitness))
    best_grid = population[best_idx].copy()
    best_fitness = float(fitness[best_idx])
    history: list[GenerationStats] = []

    def record(generation: int) -> None:
        nonlocal started, best_grid, best_fitness
        now = time.perf_counter()
        idx = int(np.argmin(fitness))
        if float(fitness[idx]) < best_fitness:
            best_fitness = float(fitness[idx])
            best_grid = population[idx].copy()
        stats = GenerationStats(
            generation=generation,
            best_fitness=float(fitness.min()),
            worst_fitness=float(fitness.max()),
            mean_fitness=float(fitness.mean()),
            elapsed_ms=(now - started) * 1000.0,
        )
        started = now
        history.append(stats)
        if observer is not None:
            observer(stats, population[idx].copy())

    record(0)

    n_children = config.population_size - config.elitism
    executor = None
    if config.jobs > 1 and n_children > 0:
        executor = ThreadPoolExecutor(max_workers=config.jobs)
    try:
        for generation in range(1, config.generations + 1):
            order = np.argsort(fitness, kind="stable")
            elites = population[order[: config.elitism]].copy()
            cum = np.cumsum(selection_weights(fitness))
            children = np.empty((n_children, rows, cols), dtype=np.int32)
            parents = population  # frozen for this generation

            def make_child(slot: int, generation=generation, parents=parents, cum=cum, children=children) -> None:
                seq = np.random.SeedSequence(config.seed, spawn_key=(generation, slot))
                draws = np.random.default_rng(seq).random(n_draws)
                a = roulette_pick(cum, float(draws[0]))
                b = roulette_pick(cum, float(draws[1]))
                children[slot] = crossover_grid(
                    parents[a],
                    parents[b],
                    cache,
                    config.mutation_rate,
                    draws[2:],
                    engine=config.engine,
                )

            if executor is not None:
                # list() propagates the first worker exception, if any.
                list(executor.map(make_child, range(n_children)))
            else:
                for slot in range(n_children):
                    make_child(slot)

            population = np.concatenate([elites, children]) if config.elitism else children
            fitness = fitness_of_population(population, cache)
            record(generation)
    finally:
        if executor is not None:
            executor.shutdown()

    return GaResult(
        best=Arrangement(dims, best_grid),
        best_fitness=best_fitness,
        history=history,
    )
