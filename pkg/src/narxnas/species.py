"""Species keys and domination detection."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .genome import Genome
from .operators import rank_order


class SpeciesMode(enum.Enum):
    NEURON_COUNT = "neuron_count"
    FULL_ARCHITECTURE = "full_architecture"


@dataclass(frozen=True)
class SpeciesKey:
    """Equivalence class of individuals.

    In neuron-count mode only ``neuron_counts`` is set; in full-architecture
    mode delays and the training method take part as well.
    """

    mode: SpeciesMode
    neuron_counts: tuple
    du: Optional[int] = None
    dy: Optional[int] = None
    trainer: Optional[str] = None

    @classmethod
    def by_neurons(cls, genome: Genome) -> "SpeciesKey":
        return cls(SpeciesMode.NEURON_COUNT, genome.layer_sizes)

    @classmethod
    def by_architecture(cls, layer_sizes, du: int, dy: int, trainer: str) -> "SpeciesKey":
        return cls(SpeciesMode.FULL_ARCHITECTURE, tuple(layer_sizes), du, dy, trainer)

    def shifted(self, step: int) -> Optional["SpeciesKey"]:
        """Same key with the last hidden layer one neuron larger/smaller."""
        last = self.neuron_counts[-1] + step
        if last < 1:
            return None
        return SpeciesKey(self.mode, self.neuron_counts[:-1] + (last,), self.du, self.dy,
                          self.trainer)


@dataclass(frozen=True)
class DominationState:
    dominated: bool
    dominant: Optional[SpeciesKey] = None
    lower: Optional[SpeciesKey] = None
    upper: Optional[SpeciesKey] = None

    @property
    def secondary(self) -> tuple:
        return tuple(k for k in (self.lower, self.upper) if k is not None)


NOT_DOMINATED = DominationState(False)


def detect_domination(fitness_values: Sequence[float], keys: Sequence[SpeciesKey],
                      hm_best: int) -> DominationState:
    """A species dominates when it owns all ``hm_best`` top-fitness places.

    Equal fitness is resolved in favour of the lower index, so callers should
    pass candidates oldest first.
    """
    if len(fitness_values) != len(keys):
        raise ValueError("fitness values and keys differ in length")
    if len(keys) < hm_best or hm_best < 1:
        return NOT_DOMINATED
    top = rank_order(fitness_values)[:hm_best]
    first = keys[top[0]]
    if any(keys[i] != first for i in top[1:]):
        return NOT_DOMINATED
    return DominationState(True, first, first.shifted(-1), first.shifted(+1))
