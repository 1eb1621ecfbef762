"""DNAS4: evolutionary structure search with gradient-trained weights.

An individual is an architecture (hidden layer sizes, ``du``, ``dy``) plus a
training method.  Weights are never evolved: every new architecture is
trained from random initial weights and scored in free-run mode.  Each
generation some individuals are retrained from fresh weights, and selection
keeps only the best member of every species before taking the ``popSize``
fittest.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fitness import DIVERGED_FITNESS, FitnessRecord, FitnessWeights, evaluate_genome
from .operators import pair_parents, rank_order, round_half_away
from .results import Individual, RunResult, generation_stats
from .seeding import derive_rng
from .species import SpeciesKey
from .training import TrainerKind, TrainSpec, train_from_scratch

_INIT, _MUTATE, _PAIR, _CROSS, _RETRAIN_PICK, _TRAIN_INIT, _TRAIN_CHILD, _TRAIN_RE = range(8)

# weights are drawn from this range before training
INIT_WEIGHT_RANGE = (-1.0, 1.0)

METHODS = tuple(k.value for k in TrainerKind)


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple
    du: int
    dy: int
    trainer: str

    @property
    def key(self) -> SpeciesKey:
        return SpeciesKey.by_architecture(self.layer_sizes, self.du, self.dy, self.trainer)


def random_architecture(config, rng: np.random.Generator) -> Architecture:
    n_layers = int(rng.integers(1, config.maxLay + 1))
    sizes = tuple(int(rng.integers(1, config.maxNinLay + 1)) for _ in range(n_layers))
    du = int(rng.integers(min(1, config.duMax), config.duMax + 1))
    dy = int(rng.integers(min(1, config.dyMax), config.dyMax + 1))
    return Architecture(sizes, du, dy, METHODS[int(rng.integers(len(METHODS)))])


def _mutate_layers(arch, config, rng):
    sizes = list(arch.layer_sizes)
    moves = []
    if len(sizes) < config.maxLay:
        moves.append("insert")
    if len(sizes) > 1:
        moves.append("remove")
    move = moves[int(rng.integers(len(moves)))]
    if move == "insert":
        sizes.insert(int(rng.integers(len(sizes) + 1)), int(rng.integers(1, config.maxNinLay + 1)))
    else:
        del sizes[int(rng.integers(len(sizes)))]
    return Architecture(tuple(sizes), arch.du, arch.dy, arch.trainer)


def _mutate_neurons(arch, config, rng):
    sizes = []
    for n in arch.layer_sizes:
        step = 1 if rng.random() < 0.5 else -1
        sizes.append(min(n + step, config.maxNinLay) if step > 0 else n - 1)
    kept = tuple(n for n in sizes if n > 0)
    if not kept:
        # never delete the last remaining layer
        kept = (1,)
    return Architecture(kept, arch.du, arch.dy, arch.trainer)


def _mutate_delays(arch, config, rng):
    du = arch.du + (1 if rng.random() < 0.5 else -1)
    dy = arch.dy + (1 if rng.random() < 0.5 else -1)
    du = min(max(du, 0), config.duMax)
    dy = min(max(dy, 0), config.dyMax)
    return Architecture(arch.layer_sizes, du, dy, arch.trainer)


def _mutate_method(arch, config, rng):
    others = [m for m in METHODS if m != arch.trainer]
    return Architecture(arch.layer_sizes, arch.du, arch.dy, others[int(rng.integers(len(others)))])


def mutate_structure(arch: Architecture, config, rng: np.random.Generator) -> Architecture:
    """Change exactly one feature: layer count, neuron counts, delays or method.

    The feature is drawn uniformly among those that can change under the
    configured caps (the layer count is frozen when ``maxLay`` is 1).
    """
    ops = [_mutate_neurons, _mutate_delays, _mutate_method]
    if config.maxLay > 1:
        ops.insert(0, _mutate_layers)
    return ops[int(rng.integers(len(ops)))](arch, config, rng)


def crossover_structure(a: Architecture, b: Architecture, rng: np.random.Generator) -> Architecture:
    """Rounded convex blends of layer count, per-layer sizes and delays.

    A layer missing from one parent counts as zero neurons there; the child
    keeps at least one neuron per layer.  The method comes from either parent
    with equal probability.
    """
    r = rng.random()
    n_layers = round_half_away(r * len(a.layer_sizes) + (1 - r) * len(b.layer_sizes))
    sizes = []
    for i in range(n_layers):
        na = a.layer_sizes[i] if i < len(a.layer_sizes) else 0
        nb = b.layer_sizes[i] if i < len(b.layer_sizes) else 0
        r = rng.random()
        sizes.append(max(1, round_half_away(r * na + (1 - r) * nb)))
    r = rng.random()
    du = round_half_away(r * a.du + (1 - r) * b.du)
    r = rng.random()
    dy = round_half_away(r * a.dy + (1 - r) * b.dy)
    trainer = a.trainer if rng.random() < 0.5 else b.trainer
    return Architecture(tuple(sizes), du, dy, trainer)


def _train_eval(arch: Architecture, dataset, config, weights, rng) -> tuple:
    spec = TrainSpec.from_config(config, TrainerKind(arch.trainer))
    res = train_from_scratch(arch.layer_sizes, arch.du, arch.dy, dataset, spec, rng,
                             *INIT_WEIGHT_RANGE)
    rec = evaluate_genome(res.genome, dataset, weights)
    if res.diverged:
        rec = FitnessRecord(DIVERGED_FITNESS, float("inf"), rec.neuron_count, rec.delay_sum, True)
    return res.genome, rec


def _train_many(jobs, dataset, config, weights) -> list:
    """``jobs`` is a list of (architecture, rng); results keep job order."""
    run = lambda job: _train_eval(job[0], dataset, config, weights, job[1])
    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def select_best_per_species(pool: list, archs: list, pop_size: int) -> list:
    """Indices of the fittest member of each species, best first, at most ``pop_size``."""
    seen = set()
    chosen = []
    for i in rank_order([ind.fitness for ind in pool]):
        key = archs[i].key
        if key in seen:
            continue
        seen.add(key)
        chosen.append(int(i))
        if len(chosen) == pop_size:
            break
    return chosen


def run_dnas4(config, dataset, seed: Optional[int] = None) -> RunResult:
    config.validate()
    if seed is not None:
        config = config.replace(seed=seed)
    config = config.replace(algorithm="dnas4")
    seed = config.seed
    weights = FitnessWeights.from_config(config)
    started = time.perf_counter()
    birth = 0

    def make(arch_results, archs):
        nonlocal birth
        out = []
        for arch, (genome, rec) in zip(archs, arch_results):
            out.append((Individual(genome, rec, birth, arch.trainer), arch))
            birth += 1
        return out

    archs = [random_architecture(config, derive_rng(seed, 0, _INIT, i)) for i in range(config.popSize)]
    jobs = [(a, derive_rng(seed, 0, _TRAIN_INIT, i)) for i, a in enumerate(archs)]
    members = make(_train_many(jobs, dataset, config, weights), archs)
    pool = [m[0] for m in members]
    chosen = select_best_per_species(pool, archs, config.popSize)
    members = [members[i] for i in chosen]
    history = [generation_stats(0, [m[0] for m in members], p_cross=config.pCross)]

    for gen in range(1, config.generations + 1):
        population = [m[0] for m in members]
        parents = [m[1] for m in members]
        children = []
        for i, arch in enumerate(parents):
            rng = derive_rng(seed, gen, _MUTATE, i)
            if rng.random() < config.pMut:
                children.append(mutate_structure(arch, config, rng))
        pairs = pair_parents(population, config.pCross, derive_rng(seed, gen, _PAIR))
        for k, (a, b) in enumerate(pairs):
            children.append(crossover_structure(parents[a], parents[b],
                                                derive_rng(seed, gen, _CROSS, k)))

        retrain = [i for i in range(len(members))
                   if derive_rng(seed, gen, _RETRAIN_PICK, i).random() < config.pRetrain]
        jobs = [(c, derive_rng(seed, gen, _TRAIN_CHILD, k)) for k, c in enumerate(children)]
        jobs += [(parents[i], derive_rng(seed, gen, _TRAIN_RE, i)) for i in retrain]
        results = _train_many(jobs, dataset, config, weights)

        current = list(members)
        for i, (genome, rec) in zip(retrain, results[len(children):]):
            old = current[i][0]
            if rec.fitness > old.fitness:
                current[i] = (Individual(genome, rec, old.birth, old.trainer), current[i][1])
        offspring = make(results[:len(children)], children)

        candidates = sorted(current, key=lambda m: m[0].birth) + offspring
        chosen = select_best_per_species([m[0] for m in candidates],
                                         [m[1] for m in candidates], config.popSize)
        members = [candidates[i] for i in chosen]
        history.append(generation_stats(gen, [m[0] for m in members], p_cross=config.pCross,
                                        pairs=len(pairs)))

    population = [m[0] for m in members]
    best = max(population, key=lambda ind: (ind.fitness, -ind.birth))
    return RunResult("dnas4", seed, history, best, population, time.perf_counter() - started)
