"""Mean response error and the size-penalised fitness function."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .genome import Genome, SimulationDiverged, simulate_closed_loop

# Fitness given to individuals whose free-run response blows up.
DIVERGED_FITNESS = -1.0e6


@dataclass(frozen=True)
class FitnessWeights:
    p1: float = 1.0
    p2: float = 0.01
    p3: float = 0.0001
    baseline: float = 10.0

    def __post_init__(self):
        if min(self.p1, self.p2, self.p3) < 0:
            raise ValueError("fitness weights must be non-negative")

    @classmethod
    def from_config(cls, config) -> "FitnessWeights":
        return cls(config.p1, config.p2, config.p3, config.baseline)


DEFAULT_WEIGHTS = FitnessWeights()


@dataclass(frozen=True)
class FitnessRecord:
    fitness: float
    mean_error: float
    neuron_count: int
    delay_sum: int
    diverged: bool = False


def mean_error(response, target) -> float:
    """Mean absolute deviation between a response and its target."""
    y = np.asarray(response, dtype=np.float64)
    ref = np.asarray(target, dtype=np.float64)
    if y.shape != ref.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: response {y.shape} vs target {ref.shape}")
    if y.size == 0:
        raise ValueError("empty sequences")
    return float(np.mean(np.abs(y - ref)))


def fitness(mean_err: float, neuron_count: int, delay_sum: int,
            weights: FitnessWeights = DEFAULT_WEIGHTS) -> float:
    return (weights.baseline - weights.p1 * mean_err - weights.p2 * neuron_count
            - weights.p3 * delay_sum)


def evaluate_genome(genome: Genome, dataset, weights: FitnessWeights = DEFAULT_WEIGHTS) -> FitnessRecord:
    """Free-run the genome over the dataset inputs and score the response."""
    n, d = genome.neuron_count, genome.delay_sum
    try:
        y = simulate_closed_loop(genome, dataset.inputs, dataset.nominal_input,
                                 dataset.nominal_output)
    except SimulationDiverged:
        return FitnessRecord(DIVERGED_FITNESS, float("inf"), n, d, diverged=True)
    err = mean_error(y, dataset.targets)
    return FitnessRecord(fitness(err, n, d, weights), err, n, d)


def evaluate_population(population: Sequence[Genome], dataset,
                        weights: FitnessWeights = DEFAULT_WEIGHTS,
                        workers: int = 1) -> list[FitnessRecord]:
    """Score every genome, preserving order.  ``workers > 1`` fans out on threads."""
    if workers <= 1 or len(population) < 2:
        return [evaluate_genome(g, dataset, weights) for g in population]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda g: evaluate_genome(g, dataset, weights), population))
