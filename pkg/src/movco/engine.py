"""Multiobjective variational constrained optimizer.

Each genetic individual is a full set of variational angles. Its fitness
comes from a single K-shot measurement batch of the corresponding state:

* ``satisfaction``: mean fraction of the hard constraints satisfied by
  the sampled schedules (divided by the satisfiability cap when the
  instance carries one);
* ``restricted_energy``: sum of (cost - cost upper bound) over the
  feasible samples only, divided by K. It is 0 while nothing feasible is
  sampled and reaches (minimum feasible cost - upper bound) when every
  shot lands on an optimal schedule, so the Pareto front of
  (satisfaction, energy) is the single point (1, min cost - upper bound).

The evolutionary engine minimizes (1 - satisfaction, restricted_energy);
energy is kept raw so its analytic bounds stay checkable. Typical runs
first push satisfaction up and only then drive the energy down, because
the energy stays pinned at 0 until feasible schedules appear in the
samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from movco import metrics, nsga2, qsim
from movco.cash import (
    BatchEvaluation,
    CmpInstance,
    cost_upper_bound,
    decode,
    evaluate_bits,
)
from movco.errors import ConfigError, InvalidArgumentError
from movco.seeding import SPACE_EXTRACT, SPACE_INIT, substream

EXACT = "exact"
SAMPLED = "sampled"


@dataclass(frozen=True)
class FitnessPair:
    """The two fitness values of one evaluation."""

    satisfaction: float
    restricted_energy: float

    def objectives(self) -> tuple[float, float]:
        """Minimization view used by the genetic engine."""
        return (1.0 - self.satisfaction, self.restricted_energy)


@dataclass(frozen=True)
class MovcoConfig:
    ansatz: str = qsim.LAYERED
    layers: int = 1
    shots: int = 8192
    ga: nsga2.GaConfig = field(default_factory=nsga2.GaConfig)
    seed: int = 0
    expectation: str = EXACT
    max_qubits: int = qsim.DEFAULT_MAX_QUBITS

    def __post_init__(self):
        problems = []
        if self.ansatz not in (qsim.LAYERED, qsim.PRODUCT):
            problems.append(f"ansatz: unknown kind {self.ansatz!r}")
        if self.ansatz == qsim.LAYERED and self.layers < 0:
            problems.append("layers: must be >= 0")
        if self.shots < 1:
            problems.append("shots: must be >= 1")
        if self.expectation not in (EXACT, SAMPLED):
            problems.append(f"expectation: unknown mode {self.expectation!r}")
        if problems:
            raise ConfigError("; ".join(problems))

    def backend(self):
        if self.ansatz == qsim.PRODUCT:
            return qsim.ProductBackend()
        return qsim.StatevectorBackend(max_qubits=self.max_qubits)


@dataclass
class RunRecord:
    """One generation (or optimizer iteration) of a run."""

    generation: int
    evaluations: int
    best_satisfaction: float | None = None
    mean_satisfaction: float | None = None
    best_energy: float | None = None
    mean_energy: float | None = None
    objective: float | None = None
    best_genome: np.ndarray | None = None


@dataclass
class RunResult:
    """Common result shape for the optimizer and both baselines."""

    method: str
    ansatz: str
    layers: int
    shots: int
    records: list[RunRecord]
    final_genomes: np.ndarray
    final_objectives: np.ndarray | None
    best_params: qsim.ParameterVector
    best_fitness: FitnessPair
    best_schedule: np.ndarray | None
    final_expected_cost: float

    @property
    def final_satisfaction(self) -> float:
        return self.best_fitness.satisfaction

    @property
    def total_evaluations(self) -> int:
        return self.records[-1].evaluations if self.records else 0


def fitness_from_batch(batch: BatchEvaluation, instance: CmpInstance) -> FitnessPair:
    """Both fitness values from one evaluated sample batch."""
    cap = instance.constraint_normalizer
    shots = batch.n_samples
    satisfaction = float(batch.sat_counts.sum(dtype=np.int64)) / (shots * cap)
    feasible = batch.sat_counts >= cap
    energy = float((batch.costs[feasible] - cost_upper_bound(instance)).sum() / shots)
    return FitnessPair(satisfaction, energy)


def fitness(
    params: qsim.ParameterVector,
    instance: CmpInstance,
    backend,
    shots: int,
    rng: np.random.Generator,
) -> FitnessPair:
    """Sample one K-shot batch and score it; both values share the batch."""
    if backend.kind != params.kind:
        raise InvalidArgumentError(
            f"backend kind {backend.kind!r} does not match params kind {params.kind!r}"
        )
    batch = backend.sample(params, shots, rng)
    return fitness_from_batch(evaluate_bits(batch.bits, instance), instance)


def best_index(objectives: np.ndarray) -> int:
    """Individual with maximal satisfaction, ties broken by lower energy.

    ``objectives`` are minimization pairs (1 - satisfaction, energy), so
    this is the lexicographic argmin.
    """
    objs = np.asarray(objectives)
    return int(np.lexsort((objs[:, 1], objs[:, 0]))[0])


def make_params(
    genome: np.ndarray, ansatz: str, layers: int
) -> qsim.ParameterVector:
    if ansatz == qsim.PRODUCT:
        return qsim.ParameterVector(genome, kind=qsim.PRODUCT)
    return qsim.ParameterVector(genome, kind=qsim.LAYERED, layers=layers)


def initial_genomes(
    instance: CmpInstance, config: MovcoConfig
) -> list[np.ndarray]:
    """Per-individual starting angles, each from its own seed substream."""
    genomes = []
    for i in range(config.ga.population_size):
        rng = substream(config.seed, SPACE_INIT, i)
        if config.ansatz == qsim.PRODUCT:
            params = qsim.init_product_params(instance.n_vars, rng)
        else:
            params = qsim.init_params(instance.n_vars, config.layers, rng)
        genomes.append(params.angles)
    return genomes


def summarize_solution(
    params: qsim.ParameterVector,
    instance: CmpInstance,
    backend,
    shots: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray | None, FitnessPair]:
    """Resample a solution: its fitness and its cheapest feasible schedule."""
    batch = backend.sample(params, shots, rng)
    evaluation = evaluate_bits(batch.bits, instance)
    pair = fitness_from_batch(evaluation, instance)
    feasible = evaluation.sat_counts >= instance.constraint_normalizer
    if not feasible.any():
        return None, pair
    candidates = np.flatnonzero(feasible)
    winner = candidates[np.argmin(evaluation.costs[candidates])]
    return decode(batch.bits[winner], instance), pair


def extract_best(
    population: Sequence[nsga2.Individual],
    instance: CmpInstance,
    backend,
    shots: int,
    rng: np.random.Generator,
) -> tuple[qsim.ParameterVector, np.ndarray | None, FitnessPair]:
    """Pick the final solution: highest satisfaction, then lowest energy."""
    if not population:
        raise InvalidArgumentError("population is empty")
    objs = np.array([ind.objectives for ind in population])
    chosen = population[best_index(objs)]
    ansatz = qsim.PRODUCT if chosen.genome.size == instance.n_vars else qsim.LAYERED
    layers = chosen.genome.size // instance.n_vars - 1
    params = make_params(chosen.genome, ansatz, layers)
    schedule, pair = summarize_solution(params, instance, backend, shots, rng)
    return params, schedule, pair


def expected_cost_of(
    params: qsim.ParameterVector,
    instance: CmpInstance,
    config: MovcoConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Expected transaction cost of a solution, exact or K-shot sampled."""
    backend = config.backend()
    if config.expectation == SAMPLED:
        if rng is None:
            rng = substream(config.seed, SPACE_EXTRACT, 1)
        batch = backend.sample(params, config.shots, rng)
        return float(evaluate_bits(batch.bits, instance).costs.mean())
    return metrics.expected_transaction_cost(backend.state(params), instance)


def run_movco(
    instance: CmpInstance, config: MovcoConfig, n_workers: int = 1
) -> RunResult:
    """Full optimization run; history has one record per generation plus
    the evaluated initial population."""
    backend = config.backend()

    def evaluate(genome: np.ndarray, rng: np.random.Generator) -> tuple[float, float]:
        params = make_params(genome, config.ansatz, config.layers)
        return fitness(params, instance, backend, config.shots, rng).objectives()

    population, history = nsga2.evolve(
        initial_genomes(instance, config),
        evaluate,
        config.ga,
        config.seed,
        n_workers=n_workers,
    )
    records = [_record_from_snapshot(snap) for snap in history]
    params, schedule, pair = extract_best(
        population, instance, backend, config.shots,
        substream(config.seed, SPACE_EXTRACT, 0),
    )
    return RunResult(
        method="movco",
        ansatz=config.ansatz,
        layers=config.layers if config.ansatz == qsim.LAYERED else 0,
        shots=config.shots,
        records=records,
        final_genomes=np.array([ind.genome for ind in population]),
        final_objectives=np.array([ind.objectives for ind in population]),
        best_params=params,
        best_fitness=pair,
        best_schedule=schedule,
        final_expected_cost=expected_cost_of(params, instance, config),
    )


def _record_from_snapshot(snap: nsga2.GenerationSnapshot) -> RunRecord:
    satisfaction = 1.0 - snap.objectives[:, 0]
    energy = snap.objectives[:, 1]
    best = best_index(snap.objectives)
    return RunRecord(
        generation=snap.generation,
        evaluations=snap.evaluations,
        best_satisfaction=float(satisfaction[best]),
        mean_satisfaction=float(satisfaction.mean()),
        best_energy=float(energy[best]),
        mean_energy=float(energy.mean()),
        best_genome=snap.genomes[best].copy(),
    )
