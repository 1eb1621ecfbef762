import numpy as np
import pytest

from narxnas.fitness import (DIVERGED_FITNESS, DEFAULT_WEIGHTS, FitnessWeights, evaluate_genome,
                             evaluate_population, fitness, mean_error)
from narxnas.genome import Genome, random_genome
from narxnas.plant import Dataset


def test_size_error_trade_off():
    a = fitness(0.02, 5, 10, DEFAULT_WEIGHTS)
    b = fitness(0.03, 4, 10, DEFAULT_WEIGHTS)
    assert abs(a - b) <= 1e-12


def test_fitness_values():
    assert fitness(0.0, 0, 0) == 10.0
    assert fitness(0.1, 2, 10) == pytest.approx(10 - 0.1 - 0.02 - 0.001, abs=1e-14)
    assert fitness(0.1, 2, 10, FitnessWeights(2, 0, 0, baseline=0)) == pytest.approx(-0.2)


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        FitnessWeights(p1=-1)


def test_mean_error():
    assert mean_error([1, 2, 3], [1, 1, 1]) == 1.0
    with pytest.raises(ValueError):
        mean_error([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        mean_error([], [])


def test_evaluate_constant_model():
    ds = Dataset([0.0] * 4, [1.0, 0.5, 0.5, 1.0], 0.0, 1.0)
    g = Genome((np.zeros((1, 2)),), np.array([0.0, 1.0]), 0, 0)
    rec = evaluate_genome(g, ds)
    assert rec.mean_error == 0.25
    assert rec.fitness == pytest.approx(10 - 0.25 - 0.01)
    assert not rec.diverged


def test_diverged_individual_gets_worst_fitness():
    ds = Dataset(np.ones(10), np.ones(10), 0.0, 1.0)
    g = Genome((np.array([[0.0, 0.0, 3.0]]),), np.array([1e308, 1e308]), 0, 1)
    rec = evaluate_genome(g, ds)
    assert rec.diverged and rec.fitness == DIVERGED_FITNESS and rec.mean_error == float("inf")


def test_parallel_evaluation_matches_serial(learning):
    rng = np.random.default_rng(0)
    pop = [random_genome(rng, [int(rng.integers(1, 5))], 2, 2) for _ in range(12)]
    assert evaluate_population(pop, learning) == evaluate_population(pop, learning, workers=4)
