import numpy as np
import pytest

from narxnas.config import table_defaults
from narxnas.hybrid import (METHODS, Architecture, crossover_structure, mutate_structure,
                            random_architecture, run_dnas4, select_best_per_species)
from narxnas.results import Individual
from narxnas.fitness import FitnessRecord


def changed_features(a, b):
    return sum([a.layer_sizes != b.layer_sizes, (a.du, a.dy) != (b.du, b.dy),
                a.trainer != b.trainer])


@pytest.mark.parametrize("max_lay", [1, 3])
def test_structure_mutation_changes_one_feature(max_lay):
    cfg = table_defaults("dnas4").replace(maxLay=max_lay, maxNinLay=4, duMax=5, dyMax=5)
    for seed in range(300):
        rng = np.random.default_rng(seed)
        a = random_architecture(cfg, rng)
        b = mutate_structure(a, cfg, rng)
        assert changed_features(a, b) <= 1
        assert 1 <= len(b.layer_sizes) <= max_lay
        assert all(1 <= n <= 4 for n in b.layer_sizes)
        assert 0 <= b.du <= 5 and 0 <= b.dy <= 5 and b.trainer in METHODS


def test_structure_crossover_bounds():
    rng = np.random.default_rng(0)
    cfg = table_defaults("dnas4").replace(maxLay=3, maxNinLay=6)
    for _ in range(500):
        a, b = random_architecture(cfg, rng), random_architecture(cfg, rng)
        c = crossover_structure(a, b, rng)
        assert min(len(a.layer_sizes), len(b.layer_sizes)) <= len(c.layer_sizes) \
            <= max(len(a.layer_sizes), len(b.layer_sizes))
        assert all(1 <= n <= 6 for n in c.layer_sizes)
        assert min(a.du, b.du) <= c.du <= max(a.du, b.du)
        assert c.trainer in (a.trainer, b.trainer)


def test_best_per_species():
    archs = [Architecture((1,), 1, 1, "lm"), Architecture((1,), 1, 1, "lm"),
             Architecture((1,), 1, 1, "br"), Architecture((2,), 1, 1, "lm")]
    pool = [Individual(None, FitnessRecord(f, 0.0, 1, 2), i)
            for i, f in enumerate([5.0, 9.0, 1.0, 7.0])]
    assert select_best_per_species(pool, archs, 10) == [1, 3, 2]
    assert select_best_per_species(pool, archs, 2) == [1, 3]


def test_dnas4_run(short_learning):
    cfg = table_defaults("dnas4").replace(popSize=6, generations=3, maxNinLay=3, duMax=4,
                                          dyMax=4, maxEpochs=15, hmBest=2)
    a = run_dnas4(cfg, short_learning, seed=1)
    b = run_dnas4(cfg.replace(workers=2), short_learning, seed=1)
    traj = a.best_fitness_trajectory
    assert all(y >= x for x, y in zip(traj, traj[1:]))
    assert traj == b.best_fitness_trajectory
    assert a.best.genome.same_as(b.best.genome)
    assert a.best.trainer in METHODS
    keys = [(ind.genome.layer_sizes, ind.genome.du, ind.genome.dy, ind.trainer)
            for ind in a.population]
    assert len(keys) == len(set(keys))
