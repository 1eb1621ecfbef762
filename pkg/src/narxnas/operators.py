"""Mutation, crossover and selection operators for weight-evolving searches.

All operators are pure: they read source genomes and an explicit
``numpy.random.Generator`` and return new genomes.  Structural mutations
(neuron birth, neuron death, delay change) emit one offspring per event, so
every offspring differs from its source by exactly one structural change.
"""

from __future__ import annotations

import math
from typing import Hashable, Optional, Sequence

import numpy as np

from .genome import Genome, StructureError

ROULETTE_EPS = 1e-6


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (2.5 -> 3, -2.5 -> -3)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def delta_w(fitness_values, min_delta: float, max_delta: float) -> np.ndarray:
    """Map fitness values linearly onto weight-change magnitudes.

    The fittest individual gets ``min_delta``, the least fit ``max_delta``.
    When all values coincide everybody gets ``min_delta``.
    """
    fit = -np.asarray(fitness_values, dtype=np.float64)
    if fit.ndim != 1 or fit.size == 0:
        raise ValueError("need a non-empty 1-D fitness vector")
    fit = fit + abs(fit.min())
    lo, hi = fit.min(), fit.max()
    if hi - lo < 1e-12:
        return np.full(fit.shape, float(min_delta))
    return (max_delta - min_delta) * (fit - lo) / (hi - lo) + min_delta


def mutate_weights(genome: Genome, delta: float, p_mut_w: float,
                   rng: np.random.Generator) -> Optional[Genome]:
    """Shift each weight by ``+/-delta`` with probability ``p_mut_w``.

    Returns None when no weight was selected.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    flat = genome.flat
    hit = rng.random(flat.size) < p_mut_w
    if not hit.any():
        return None
    sign = np.where(rng.random(flat.size) < 0.5, -1.0, 1.0)
    return genome.with_flat(flat + hit * sign * delta)


def _layers(genome: Genome) -> list[np.ndarray]:
    return [np.array(layer) for layer in genome.hidden] + [genome.output[None, :].copy()]


def _assemble(layers: list[np.ndarray], du: int, dy: int) -> Genome:
    return Genome(tuple(layers[:-1]), layers[-1][0], du, dy)


def mutate_add_neurons(genome: Genome, p_new: float, min_w: float, max_w: float,
                       max_n_in_lay: int, rng: np.random.Generator) -> list[Genome]:
    """Neuron birth: every free place in every hidden layer may spawn a child.

    A successful draw yields a genome with one extra neuron at the first free
    place of that layer; the next layer gains a random weight for it.
    """
    children = []
    for li, layer in enumerate(genome.hidden):
        n = layer.shape[0]
        for _ in range(max(0, max_n_in_lay - n)):
            if rng.random() >= p_new:
                continue
            layers = _layers(genome)
            new_row = rng.uniform(min_w, max_w, size=(1, layer.shape[1]))
            layers[li] = np.vstack([layers[li], new_row])
            nxt = layers[li + 1]
            col = rng.uniform(min_w, max_w, size=nxt.shape[0])
            layers[li + 1] = np.insert(nxt, n, col, axis=1)
            children.append(_assemble(layers, genome.du, genome.dy))
    return children


def mutate_delete_neurons(genome: Genome, p_del: float, rng: np.random.Generator) -> list[Genome]:
    """Neuron death: each hidden neuron may be removed, one child per removal.

    A layer's sole neuron is never removed.
    """
    children = []
    for li, layer in enumerate(genome.hidden):
        n = layer.shape[0]
        for j in range(n):
            if rng.random() >= p_del or n == 1:
                continue
            layers = _layers(genome)
            layers[li] = np.delete(layers[li], j, axis=0)
            layers[li + 1] = np.delete(layers[li + 1], j, axis=1)
            children.append(_assemble(layers, genome.du, genome.dy))
    return children


def _change_delay(genome: Genome, which: str, step: int, min_w: float, max_w: float,
                  rng: np.random.Generator) -> Genome:
    layers = _layers(genome)
    first = layers[0]
    du, dy = genome.du, genome.dy
    if which == "u":
        col = du + 1 if step > 0 else du
        du += step
    else:
        col = du + dy + 1 if step > 0 else du + dy
        dy += step
    if step > 0:
        layers[0] = np.insert(first, col, rng.uniform(min_w, max_w, size=first.shape[0]), axis=1)
    else:
        layers[0] = np.delete(first, col, axis=1)
    return _assemble(layers, du, dy)


def mutate_delays(genome: Genome, p_mut_d: float, min_w: float, max_w: float,
                  rng: np.random.Generator, du_max: Optional[int] = None,
                  dy_max: Optional[int] = None) -> list[Genome]:
    """Shift ``du`` and ``dy`` independently by one sample, one child each.

    Decreasing drops the oldest delayed input and its weights; increasing adds
    a new oldest input with weights from ``[min_w, max_w]``.  Changes leaving
    ``[0, max]`` are skipped.
    """
    children = []
    for which, level, cap in (("u", genome.du, du_max), ("y", genome.dy, dy_max)):
        if rng.random() >= p_mut_d:
            continue
        step = 1 if rng.random() < 0.5 else -1
        if level + step < 0 or (cap is not None and level + step > cap):
            continue
        children.append(_change_delay(genome, which, step, min_w, max_w, rng))
    return children


def _slot_columns(parent: Genome, slots, layer_index: int, parent_id: int):
    """Column in ``parent``'s layer feeding each child input slot (None if absent)."""
    cols = []
    for slot in slots:
        if layer_index == 0:
            kind, lag = slot
            if kind == "u":
                cols.append(lag if lag <= parent.du else None)
            else:
                cols.append(parent.du + lag if lag <= parent.dy else None)
        else:
            owner, j = slot
            cols.append(j if owner in ("both", parent_id) else None)
    return cols


def crossover_pair(parent1: Genome, parent2: Genome, rng: np.random.Generator,
                   min_w: float = -1.0, max_w: float = 1.0) -> Genome:
    """Recombine two genomes with the same number of hidden layers.

    Child delays are rounded convex blends of the parents' delays.  Neurons
    at positions both parents share are blended weight by weight
    (``r*w1 + (1-r)*w2`` with a fresh ``r`` per weight) wherever both
    parents carry that input, and copied where only one does.  A neuron only
    the larger parent has is inherited with probability 1/2 and appended after
    the child's last neuron.  Inputs the contributing parent lacks get fresh
    weights from ``[min_w, max_w]``.
    """
    if len(parent1.hidden) != len(parent2.hidden):
        raise StructureError("crossover needs parents with equal hidden layer counts")
    parents = (parent1, parent2)
    r = rng.random()
    du = round_half_away(r * parent1.du + (1 - r) * parent2.du)
    r = rng.random()
    dy = round_half_away(r * parent1.dy + (1 - r) * parent2.dy)

    slots = [("u", i) for i in range(du + 1)] + [("y", i) for i in range(1, dy + 1)]
    mats = [layer for layer in zip(parent1.hidden, parent2.hidden)]
    mats.append((parent1.output[None, :], parent2.output[None, :]))
    child_layers = []
    for li, (a, b) in enumerate(mats):
        cols = [_slot_columns(p, slots, li, pid) for pid, p in enumerate(parents)]
        na, nb = a.shape[0], b.shape[0]
        sources = [("both", j) for j in range(min(na, nb))]
        if li < len(mats) - 1 and na != nb:
            owner = 0 if na > nb else 1
            for j in range(min(na, nb), max(na, nb)):
                if rng.random() < 0.5:
                    sources.append((owner, j))
        rows = []
        for owner, j in sources:
            row = np.empty(len(slots) + 1)
            for s in range(len(slots)):
                ca, cb = cols[0][s], cols[1][s]
                if owner == "both" and ca is not None and cb is not None:
                    w = rng.random()
                    row[s] = w * a[j, ca] + (1 - w) * b[j, cb]
                elif owner in ("both", 0) and ca is not None:
                    row[s] = a[j, ca]
                elif owner in ("both", 1) and cb is not None:
                    row[s] = b[j, cb]
                else:
                    row[s] = rng.uniform(min_w, max_w)
            if owner == "both":
                w = rng.random()
                row[-1] = w * a[j, -1] + (1 - w) * b[j, -1]
            else:
                row[-1] = (a if owner == 0 else b)[j, -1]
            rows.append(row)
        child_layers.append(np.array(rows))
        slots = sources
    return Genome(tuple(child_layers[:-1]), child_layers[-1][0], du, dy)


def pair_parents(population: Sequence, p_cross: float,
                 rng: np.random.Generator) -> list[tuple[int, int]]:
    """Draw a parent pool with probability ``p_cross`` each and pair it randomly.

    No index appears in more than one pair; an odd leftover is dropped.
    """
    pool = [i for i in range(len(population)) if rng.random() < p_cross]
    order = [pool[i] for i in rng.permutation(len(pool))]
    return [(order[i], order[i + 1]) for i in range(0, len(order) - 1, 2)]


def pair_within_groups(keys: Sequence[Hashable], p_cross: float,
                       rng: np.random.Generator) -> list[tuple[int, int]]:
    """Like :func:`pair_parents` but both members of a pair share a key."""
    groups: dict = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    pairs = []
    for members in groups.values():
        for a, b in pair_parents(members, p_cross, rng):
            pairs.append((members[a], members[b]))
    return pairs


def rank_order(fitness_values) -> np.ndarray:
    """Indices by descending fitness; ties keep the earlier index first."""
    f = np.asarray(fitness_values, dtype=np.float64)
    return np.argsort(-f, kind="stable")


def roulette_probabilities(fitness_values) -> np.ndarray:
    f = np.asarray(fitness_values, dtype=np.float64)
    w = f - f.min() + ROULETTE_EPS
    return w / w.sum()


def roulette_draw(fitness_values, k: int, rng: np.random.Generator,
                  replace: bool = True) -> np.ndarray:
    """Draw ``k`` indices with probability proportional to shifted fitness."""
    p = roulette_probabilities(fitness_values)
    return rng.choice(p.size, size=k, replace=replace, p=p)


def roulette_select_with_elitism(fitness_values, pop_size: int, hm_best: int,
                                 rng: np.random.Generator) -> list[int]:
    """mu+lambda survivor selection over a pooled candidate set.

    The ``hm_best`` fittest pass unconditionally and the remaining
    ``pop_size - hm_best`` places are drawn by roulette without replacement.
    Returns pool indices in rank order.
    """
    f = np.asarray(fitness_values, dtype=np.float64)
    if f.size == 0:
        raise ValueError("empty candidate pool")
    if hm_best > pop_size:
        raise ValueError("hm_best exceeds pop_size")
    order = rank_order(f)
    if f.size <= pop_size:
        return order.tolist()
    elite = order[:hm_best]
    rest = order[hm_best:]
    drawn = rest[roulette_draw(f[rest], pop_size - hm_best, rng, replace=False)]
    chosen = set(elite.tolist()) | set(drawn.tolist())
    return [i for i in order.tolist() if i in chosen]
