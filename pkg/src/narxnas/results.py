"""Individuals, per-generation statistics and run results."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fitness import FitnessRecord
from .genome import Genome


@dataclass(frozen=True)
class Individual:
    genome: Genome
    record: FitnessRecord
    birth: int
    trainer: Optional[str] = None

    @property
    def fitness(self) -> float:
        return self.record.fitness


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    mean_error: float
    best_mean_error: float
    best_neurons: int
    population_size: int
    dominated: bool = False
    p_cross: float = 0.0
    pairs: int = 0
    mixed_pairs: int = 0

    FIELDS = ("generation", "best_fitness", "mean_fitness", "mean_error", "best_mean_error",
              "best_neurons", "population_size", "dominated", "p_cross", "pairs", "mixed_pairs")


def generation_stats(generation: int, population: Sequence[Individual], **extra) -> GenerationStats:
    fits = np.array([ind.fitness for ind in population])
    errs = np.array([ind.record.mean_error for ind in population if not ind.record.diverged])
    best = population[int(np.argmax(fits))]
    return GenerationStats(
        generation=generation,
        best_fitness=float(fits.max()),
        mean_fitness=float(fits.mean()),
        mean_error=float(errs.mean()) if errs.size else float("inf"),
        best_mean_error=best.record.mean_error,
        best_neurons=best.genome.neuron_count,
        population_size=len(population),
        **extra,
    )


@dataclass
class RunResult:
    algorithm: str
    seed: int
    history: list
    best: Individual
    population: list = field(repr=False)
    duration_s: float = 0.0

    @property
    def best_fitness_trajectory(self) -> list:
        return [s.best_fitness for s in self.history]

    @property
    def neuron_histogram(self) -> dict:
        return dict(sorted(Counter(ind.genome.neuron_count for ind in self.population).items()))

    @property
    def du_mean(self) -> float:
        return float(np.mean([ind.genome.du for ind in self.population]))

    @property
    def dy_mean(self) -> float:
        return float(np.mean([ind.genome.dy for ind in self.population]))

    def summary(self) -> dict:
        rec = self.best.record
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "generations": len(self.history) - 1,
            "best": {
                "fitness": rec.fitness,
                "mean_error": rec.mean_error,
                "neurons": rec.neuron_count,
                "layer_sizes": list(self.best.genome.layer_sizes),
                "du": self.best.genome.du,
                "dy": self.best.genome.dy,
                "trainer": self.best.trainer,
                "diverged": rec.diverged,
            },
            "final_population": {
                "size": len(self.population),
                "neuron_histogram": {str(k): v for k, v in self.neuron_histogram.items()},
                "du_mean": self.du_mean,
                "dy_mean": self.dy_mean,
            },
            "wall_clock_s": self.duration_s,
        }
