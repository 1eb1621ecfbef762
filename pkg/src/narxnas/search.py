"""Weight-evolving architecture searches (DNAS1, DNAS2, DNAS3).

All three share one generation loop::

    evaluate -> mutate (weights, neuron birth[, death][, delays])
             -> crossover -> evaluate offspring -> mu+lambda selection

DNAS1 pins the delays and selects by roulette with elitism.  DNAS2 also
evolves the delays.  DNAS3 adds neuron death, splits the population into
species by hidden-neuron count and switches to intra-species crossover and
per-species elitism while one species dominates.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np

from .fitness import FitnessWeights, evaluate_population
from .genome import init_genome
from .operators import (crossover_pair, delta_w, mutate_add_neurons, mutate_delays,
                        mutate_delete_neurons, mutate_weights, pair_parents,
                        pair_within_groups, rank_order, roulette_select_with_elitism)
from .results import Individual, RunResult, generation_stats
from .seeding import derive_rng
from .species import NOT_DOMINATED, SpeciesKey, detect_domination

log = logging.getLogger(__name__)

# operator ids for sub-stream keys
_INIT, _MUT_W, _MUT_ADD, _MUT_DEL, _MUT_D, _PAIR, _CROSS, _SELECT, _REGROW = range(9)

P_CROSS_DOMINATED = 1.0
P_CROSS_AFTER_DOMINATION = 0.2


class _Births:
    def __init__(self):
        self.n = 0

    def __call__(self) -> int:
        self.n += 1
        return self.n - 1


def _evaluate(genomes, dataset, weights, workers, births) -> list:
    records = evaluate_population(genomes, dataset, weights, workers)
    return [Individual(g, r, births()) for g, r in zip(genomes, records)]


def _mutants(config, gen: int, population: list, variant: str) -> list:
    deltas = delta_w([ind.fitness for ind in population], config.minDelta, config.maxDelta)
    seed = config.seed
    out = []
    for i, ind in enumerate(population):
        g = ind.genome
        m = mutate_weights(g, float(deltas[i]), config.pMutW, derive_rng(seed, gen, _MUT_W, i))
        if m is not None:
            out.append(m)
        out += mutate_add_neurons(g, config.pMutNewN, config.minW, config.maxW,
                                  config.maxNinLay, derive_rng(seed, gen, _MUT_ADD, i))
        if variant == "dnas3":
            out += mutate_delete_neurons(g, config.pMutDelN, derive_rng(seed, gen, _MUT_DEL, i))
        if variant in ("dnas2", "dnas3"):
            out += mutate_delays(g, config.pMutD, config.minW, config.maxW,
                                 derive_rng(seed, gen, _MUT_D, i), config.duMax, config.dyMax)
    return out


def _species_elite(pool: list, order, state, hm_best: int) -> list:
    keep = []
    for key in (state.dominant, *state.secondary):
        taken = 0
        for i in order:
            if taken == hm_best:
                break
            if SpeciesKey.by_neurons(pool[i].genome) == key:
                keep.append(int(i))
                taken += 1
    return sorted(keep, key=list(order).index)


def evolve(config, dataset, seed: Optional[int] = None) -> RunResult:
    """Run DNAS1, DNAS2 or DNAS3 as selected by ``config.algorithm``."""
    config.validate()
    variant = config.algorithm
    if variant not in ("dnas1", "dnas2", "dnas3"):
        raise ValueError(f"evolve() runs dnas1..dnas3, not {variant!r}")
    if seed is not None:
        config = config.replace(seed=seed)
    seed = config.seed
    weights = FitnessWeights.from_config(config)
    births = _Births()
    started = time.perf_counter()

    genomes = [init_genome(config, derive_rng(seed, 0, _INIT, i)) for i in range(config.popSize)]
    population = _evaluate(genomes, dataset, weights, config.workers, births)
    population = [population[i] for i in rank_order([p.fitness for p in population])]
    history = [generation_stats(0, population, p_cross=config.pCross)]

    p_cross = config.pCross
    state = NOT_DOMINATED
    was_dominated = False
    for gen in range(1, config.generations + 1):
        offspring = _mutants(config, gen, population, variant)

        if state.dominated:
            keys = [SpeciesKey.by_neurons(ind.genome) for ind in population]
            pairs = pair_within_groups(keys, P_CROSS_DOMINATED, derive_rng(seed, gen, _PAIR))
            used_p = P_CROSS_DOMINATED
        else:
            pairs = pair_parents(population, p_cross, derive_rng(seed, gen, _PAIR))
            used_p = p_cross
        mixed = 0
        for k, (a, b) in enumerate(pairs):
            ga, gb = population[a].genome, population[b].genome
            mixed += ga.layer_sizes != gb.layer_sizes
            offspring.append(crossover_pair(ga, gb, derive_rng(seed, gen, _CROSS, k),
                                            config.minW, config.maxW))

        pool = sorted(population, key=lambda ind: ind.birth)
        pool += _evaluate(offspring, dataset, weights, config.workers, births)
        fits = [ind.fitness for ind in pool]
        order = rank_order(fits)

        if variant == "dnas3":
            keys = [SpeciesKey.by_neurons(ind.genome) for ind in pool]
            state = detect_domination(fits, keys, config.hmBest)
            if state.dominated:
                chosen = _species_elite(pool, order, state, config.hmBest)
                was_dominated = True
            else:
                if was_dominated:
                    p_cross = P_CROSS_AFTER_DOMINATION
                chosen = [int(i) for i in order[:config.popSize]]
            population = [pool[i] for i in chosen]
            if not state.dominated and len(population) < config.popSize:
                population = _regrow(config, gen, population, dataset, weights, births)
        else:
            chosen = roulette_select_with_elitism(fits, config.popSize, config.hmBest,
                                                  derive_rng(seed, gen, _SELECT))
            population = [pool[i] for i in chosen]

        history.append(generation_stats(gen, population, dominated=state.dominated,
                                        p_cross=used_p, pairs=len(pairs), mixed_pairs=mixed))
        log.debug("%s gen %d best %.5f size %d", variant, gen, history[-1].best_fitness,
                  len(population))

    best = max(population, key=lambda ind: (ind.fitness, -ind.birth))
    return RunResult(variant, seed, history, best, population,
                     time.perf_counter() - started)


def _regrow(config, gen, population, dataset, weights, births) -> list:
    """Top up a shrunken population with weight mutants of its members."""
    need = config.popSize - len(population)
    deltas = delta_w([ind.fitness for ind in population], config.minDelta, config.maxDelta)
    extra = []
    attempt = 0
    while len(extra) < need and attempt < 50 * need:
        i = attempt % len(population)
        rng = derive_rng(config.seed, gen, _REGROW, attempt)
        m = mutate_weights(population[i].genome, float(deltas[i]), max(config.pMutW, 1e-3), rng)
        if m is not None:
            extra.append(m)
        attempt += 1
    grown = population + _evaluate(extra, dataset, weights, config.workers, births)
    return [grown[i] for i in rank_order([ind.fitness for ind in grown])]


def run_dnas1(config, dataset, seed: Optional[int] = None) -> RunResult:
    return evolve(config.replace(algorithm="dnas1"), dataset, seed)


def run_dnas2(config, dataset, seed: Optional[int] = None) -> RunResult:
    return evolve(config.replace(algorithm="dnas2"), dataset, seed)


def run_dnas3(config, dataset, seed: Optional[int] = None) -> RunResult:
    return evolve(config.replace(algorithm="dnas3"), dataset, seed)
