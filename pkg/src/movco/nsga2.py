"""Elitist non-dominated sorting genetic algorithm.

All objectives are minimized. Vector a dominates b when a <= b
componentwise with at least one strict inequality. Each generation merges
the parent population with its offspring, classifies the union into
Pareto fronts, and keeps the best ``population_size`` individuals; a
partially taken front is resolved by crowding distance, so sparsely
populated regions of objective space survive. Parents are chosen by
binary tournament on (front rank, crowding distance); offspring are
produced by simulated binary crossover and polynomial mutation on
box-bounded real genomes.

Fitness evaluations may be stochastic: each (generation, slot) evaluation
receives its own generator derived from the run seed, so parallel
evaluation reproduces serial results exactly. Individuals are evaluated
once and never re-evaluated.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from movco.errors import EvaluationError, InvalidArgumentError
from movco.seeding import SPACE_EVAL, SPACE_OPS, substream

Evaluator = Callable[[np.ndarray, np.random.Generator], Sequence[float]]


@dataclass
class Individual:
    genome: np.ndarray
    objectives: tuple[float, ...] | None = None
    rank: int | None = None
    crowding: float | None = None


@dataclass(frozen=True)
class GaConfig:
    """Operator and loop hyperparameters.

    The defaults (eta_c 15, crossover 0.9 per gene, eta_m 20, mutation
    1/genome_length) are the customary values for real-coded NSGA-II.
    Genomes are clamped to [lower, upper] after every operator.
    """

    population_size: int = 10
    offspring_size: int = 10
    generations: int = 200
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float | None = None  # None: 1 / genome length
    mutation_eta: float = 20.0
    lower: float = 0.0
    upper: float = 2.0 * np.pi

    def __post_init__(self):
        if self.population_size < 1 or self.offspring_size < 1 or self.generations < 0:
            raise InvalidArgumentError("population, offspring and generations must be >= 1 (generations >= 0)")
        for prob in (self.crossover_prob, self.mutation_prob):
            if prob is not None and not 0.0 <= prob <= 1.0:
                raise InvalidArgumentError("operator probabilities must lie in [0, 1]")
        if self.crossover_eta < 0 or self.mutation_eta < 0:
            raise InvalidArgumentError("distribution indices must be >= 0")
        if not self.upper > self.lower:
            raise InvalidArgumentError("need upper > lower gene bound")


@dataclass(frozen=True)
class GenerationSnapshot:
    """Survivor population after one generation, plus the evaluation budget."""

    generation: int
    evaluations: int
    genomes: np.ndarray      # (population_size, n_genes)
    objectives: np.ndarray   # (population_size, n_objectives)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Classify points into Pareto fronts (indices, best front first)."""
    n = len(objectives)
    if n == 0:
        return []
    objs = np.asarray(objectives, dtype=np.float64)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = np.zeros(n, dtype=np.int64)
    for p in range(n):
        for q in range(p + 1, n):
            if dominates(objs[p], objs[q]):
                dominated_by[p].append(q)
                domination_count[q] += 1
            elif dominates(objs[q], objs[p]):
                dominated_by[q].append(p)
                domination_count[p] += 1
    fronts = [[i for i in range(n) if domination_count[i] == 0]]
    while True:
        next_front = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    next_front.append(q)
        if not next_front:
            break
        fronts.append(sorted(next_front))
    return fronts


def crowding_distance(front_objectives: Sequence[Sequence[float]]) -> np.ndarray:
    """Density metric within one front; extremes are infinite.

    Interior points accumulate, per objective, the normalized gap between
    their sorted neighbours. Objectives with zero span contribute nothing.
    """
    objs = np.asarray(front_objectives, dtype=np.float64)
    r = objs.shape[0]
    if r == 0:
        return np.empty(0)
    if r <= 2:
        return np.full(r, np.inf)
    distances = np.zeros(r)
    for m in range(objs.shape[1]):
        order = np.argsort(objs[:, m], kind="stable")
        values = objs[order, m]
        distances[order[0]] = np.inf
        distances[order[-1]] = np.inf
        span = values[-1] - values[0]
        if span <= 0:
            continue
        gaps = np.abs(values[2:] - values[:-2]) / span
        interior = order[1:-1]
        finite = ~np.isinf(distances[interior])
        distances[interior[finite]] += gaps[finite]
    return distances


def _beats(a: Individual, b: Individual, rng: np.random.Generator) -> bool:
    if a.rank != b.rank:
        return a.rank < b.rank
    if a.crowding != b.crowding:
        return a.crowding > b.crowding
    return bool(rng.random() < 0.5)


def tournament_select(population: Sequence[Individual], rng: np.random.Generator) -> int:
    """Binary tournament: lower rank wins, then larger crowding, then a coin."""
    n = len(population)
    if n < 2:
        return 0
    i, j = rng.choice(n, size=2, replace=False)
    return int(i) if _beats(population[i], population[j], rng) else int(j)


def sbx_crossover(
    parent1: np.ndarray,
    parent2: np.ndarray,
    eta: float,
    prob: float,
    lower: float,
    upper: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover, gene by gene.

    With probability ``prob`` a gene pair is blended through the spread
    factor beta drawn from the SBX distribution with index ``eta``;
    otherwise both genes are copied. Pre-clamp, children preserve the
    parent sum exactly.
    """
    p1 = np.asarray(parent1, dtype=np.float64)
    p2 = np.asarray(parent2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise InvalidArgumentError("parents must have equal genome length")
    apply = rng.random(p1.size) < prob
    u = rng.random(p1.size)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
    )
    beta = np.where(apply, beta, 1.0)  # beta 1 leaves genes unchanged
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return np.clip(c1, lower, upper), np.clip(c2, lower, upper)


def polynomial_mutation(
    genome: np.ndarray,
    eta: float,
    prob: float,
    lower: float,
    upper: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Bounded polynomial mutation, gene by gene with probability ``prob``."""
    x = np.asarray(genome, dtype=np.float64).copy()
    span = upper - lower
    apply = rng.random(x.size) < prob
    u = rng.random(x.size)
    if not apply.any():
        return x
    xs = x[apply]
    us = u[apply]
    d_low = (xs - lower) / span
    d_high = (upper - xs) / span
    exp = 1.0 / (eta + 1.0)
    delta = np.where(
        us < 0.5,
        (2.0 * us + (1.0 - 2.0 * us) * (1.0 - d_low) ** (eta + 1.0)) ** exp - 1.0,
        1.0 - (2.0 * (1.0 - us) + 2.0 * (us - 0.5) * (1.0 - d_high) ** (eta + 1.0)) ** exp,
    )
    x[apply] = np.clip(xs + delta * span, lower, upper)
    return x


def rank_and_crowd(population: list[Individual]) -> list[list[int]]:
    """Assign front ranks (1-based) and per-front crowding distances."""
    objs = [ind.objectives for ind in population]
    fronts = nondominated_sort(objs)
    for rank, front in enumerate(fronts, start=1):
        distances = crowding_distance([population[i].objectives for i in front])
        for i, d in zip(front, distances):
            population[i].rank = rank
            population[i].crowding = float(d)
    return fronts


def select_survivors(population: list[Individual], capacity: int) -> list[Individual]:
    """Keep the best ``capacity`` individuals by (rank, crowding).

    Whole fronts are taken in order; the front that overflows is cut by
    descending crowding distance (stable on ties).
    """
    fronts = rank_and_crowd(population)
    survivors: list[Individual] = []
    for front in fronts:
        if len(survivors) + len(front) <= capacity:
            survivors.extend(population[i] for i in front)
        else:
            room = capacity - len(survivors)
            order = sorted(front, key=lambda i: -population[i].crowding)
            survivors.extend(population[i] for i in order[:room])
        if len(survivors) == capacity:
            break
    return survivors


def _evaluate_generation(
    genomes: list[np.ndarray],
    evaluator: Evaluator,
    seed: int,
    generation: int,
    n_workers: int,
) -> list[tuple[float, ...]]:
    streams = [substream(seed, SPACE_EVAL, generation, i) for i in range(len(genomes))]

    def run(slot: int) -> tuple[float, ...]:
        try:
            return tuple(float(v) for v in evaluator(genomes[slot], streams[slot]))
        except Exception as exc:  # noqa: BLE001 - context added, then re-raised
            raise EvaluationError(
                f"evaluator failed at generation {generation}, individual {slot}: {exc}"
            ) from exc

    if n_workers > 1 and len(genomes) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(run, range(len(genomes))))
    return [run(i) for i in range(len(genomes))]


def make_offspring(
    population: list[Individual],
    config: GaConfig,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Tournament -> SBX -> mutation until ``offspring_size`` genomes exist."""
    n_genes = population[0].genome.size
    p_mut = config.mutation_prob if config.mutation_prob is not None else 1.0 / n_genes
    children: list[np.ndarray] = []
    while len(children) < config.offspring_size:
        a = population[tournament_select(population, rng)].genome
        b = population[tournament_select(population, rng)].genome
        c1, c2 = sbx_crossover(
            a, b, config.crossover_eta, config.crossover_prob,
            config.lower, config.upper, rng,
        )
        for child in (c1, c2):
            children.append(
                polynomial_mutation(
                    child, config.mutation_eta, p_mut,
                    config.lower, config.upper, rng,
                )
            )
    return children[: config.offspring_size]


def evolve(
    initial_genomes: Sequence[np.ndarray],
    evaluator: Evaluator,
    config: GaConfig,
    seed: int,
    n_workers: int = 1,
) -> tuple[list[Individual], list[GenerationSnapshot]]:
    """Run the generational loop and return survivors plus full history.

    The history holds one snapshot per generation, including generation 0
    (the evaluated initial population). Total evaluator calls equal
    ``len(initial) + offspring_size * generations``.
    """
    if len(initial_genomes) != config.population_size:
        raise InvalidArgumentError(
            f"initial population has {len(initial_genomes)} genomes, "
            f"config expects {config.population_size}"
        )
    population = [Individual(np.asarray(g, dtype=np.float64)) for g in initial_genomes]
    objectives = _evaluate_generation(
        [ind.genome for ind in population], evaluator, seed, 0, n_workers
    )
    for ind, obj in zip(population, objectives):
        ind.objectives = obj
    evaluations = len(population)
    rank_and_crowd(population)
    history = [_snapshot(0, evaluations, population)]

    for generation in range(1, config.generations + 1):
        op_rng = substream(seed, SPACE_OPS, generation)
        child_genomes = make_offspring(population, config, op_rng)
        child_objs = _evaluate_generation(
            child_genomes, evaluator, seed, generation, n_workers
        )
        evaluations += len(child_genomes)
        offspring = [
            Individual(g, objectives=o) for g, o in zip(child_genomes, child_objs)
        ]
        population = select_survivors(population + offspring, config.population_size)
        history.append(_snapshot(generation, evaluations, population))
    return population, history


def _snapshot(generation: int, evaluations: int, population: list[Individual]) -> GenerationSnapshot:
    return GenerationSnapshot(
        generation=generation,
        evaluations=evaluations,
        genomes=np.array([ind.genome for ind in population]),
        objectives=np.array([ind.objectives for ind in population]),
    )
