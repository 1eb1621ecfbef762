"""Recurrent NARX network genome and its closed-loop simulation.

A genome holds one or more hidden layers of bipolar-sigmoid neurons, a single
linear output neuron, and two delay levels: ``du`` past inputs and ``dy`` past
outputs fed back from the network's own response.  Each neuron is a weight row
with the bias stored in the last slot.  First-layer rows are ordered::

    [u(k), u(k-1), ..., u(k-du), y(k-1), ..., y(k-dy), bias]

Genomes are immutable; every operator builds a new one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from numba import njit


class StructureError(ValueError):
    """Raised when a genome violates its structural rules."""


class ActivationKind(enum.IntEnum):
    BIPOLAR_SIGMOID_HIDDEN = 1
    LINEAR_OUTPUT = 2


def bipolar_sigmoid(x):
    return np.tanh(x)


@dataclass(frozen=True, eq=False)
class Neuron:
    """Read-only view of one neuron: weights (bias last) plus activation id."""

    weights: np.ndarray
    activation: ActivationKind

    @property
    def bias(self) -> float:
        return float(self.weights[-1])


def required_weights(layer_index: int, layer_sizes: Sequence[int], du: int, dy: int) -> int:
    """Number of weights (bias included) a neuron in ``layer_index`` must carry.

    ``layer_index`` is 1-based; ``len(layer_sizes) + 1`` addresses the output
    layer.

    >>> required_weights(1, [4], 5, 5)
    12
    >>> required_weights(2, [4], 5, 5)
    5
    """
    n_layers = len(layer_sizes)
    if not 1 <= layer_index <= n_layers + 1:
        raise StructureError(
            f"layer index {layer_index} outside 1..{n_layers + 1}"
        )
    if layer_index == 1:
        return 1 + du + dy + 1
    return int(layer_sizes[layer_index - 2]) + 1


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Genome:
    """Recurrent SISO network individual.

    Parameters
    ----------
    hidden : tuple of ndarray
        One ``(n_neurons, n_inputs + 1)`` matrix per hidden layer.
    output : ndarray
        Output neuron weights, ``n_last_hidden + 1`` long.
    du, dy : int
        Input and feedback delay levels in samples.
    """

    hidden: tuple
    output: np.ndarray
    du: int
    dy: int

    def __post_init__(self):
        hidden = tuple(_frozen(np.atleast_2d(layer)) for layer in self.hidden)
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "output", _frozen(self.output).ravel())
        object.__setattr__(self, "du", int(self.du))
        object.__setattr__(self, "dy", int(self.dy))
        self.validate()

    def validate(self) -> None:
        if self.du < 0 or self.dy < 0:
            raise StructureError(f"negative delay level (du={self.du}, dy={self.dy})")
        if not self.hidden:
            raise StructureError("genome needs at least one hidden layer")
        sizes = self.layer_sizes
        for i, layer in enumerate(self.hidden, start=1):
            if layer.ndim != 2 or layer.shape[0] < 1:
                raise StructureError(f"hidden layer {i} is empty")
            need = required_weights(i, sizes, self.du, self.dy)
            if layer.shape[1] != need:
                raise StructureError(
                    f"hidden layer {i}: neurons carry {layer.shape[1]} weights, need {need}"
                )
        need = required_weights(len(sizes) + 1, sizes, self.du, self.dy)
        if self.output.shape != (need,):
            raise StructureError(
                f"output neuron carries {self.output.size} weights, need {need}"
            )

    @property
    def layer_sizes(self) -> tuple:
        return tuple(int(layer.shape[0]) for layer in self.hidden)

    @property
    def neuron_count(self) -> int:
        """Total number of hidden neurons."""
        return sum(self.layer_sizes)

    @property
    def delay_sum(self) -> int:
        return self.du + self.dy

    @property
    def hidden_layers(self) -> tuple:
        return tuple(
            tuple(Neuron(row, ActivationKind.BIPOLAR_SIGMOID_HIDDEN) for row in layer)
            for layer in self.hidden
        )

    @property
    def output_neuron(self) -> Neuron:
        return Neuron(self.output, ActivationKind.LINEAR_OUTPUT)

    @cached_property
    def flat(self) -> np.ndarray:
        """All weights, layer by layer and neuron by neuron, bias last."""
        parts = [layer.ravel() for layer in self.hidden] + [self.output]
        arr = np.concatenate(parts)
        arr.setflags(write=False)
        return arr

    @cached_property
    def sizes(self) -> np.ndarray:
        """``[first-layer fan-in, n_1, ..., n_L, 1]`` used by the kernels."""
        return np.array([1 + self.du + self.dy, *self.layer_sizes, 1], dtype=np.int64)

    @property
    def n_weights(self) -> int:
        return int(self.flat.size)

    def with_flat(self, flat) -> "Genome":
        """Same architecture with weights taken from a flat vector."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_weights,):
            raise StructureError(
                f"flat vector has {flat.size} entries, genome needs {self.n_weights}"
            )
        layers, pos = [], 0
        for layer in self.hidden:
            n = layer.size
            layers.append(flat[pos:pos + n].reshape(layer.shape))
            pos += n
        return Genome(tuple(layers), flat[pos:], self.du, self.dy)

    def same_as(self, other: "Genome") -> bool:
        return (
            self.du == other.du
            and self.dy == other.dy
            and self.layer_sizes == other.layer_sizes
            and np.array_equal(self.flat, other.flat)
        )

    def to_dict(self) -> dict:
        return {
            "du": self.du,
            "dy": self.dy,
            "layer_sizes": list(self.layer_sizes),
            "hidden": [layer.tolist() for layer in self.hidden],
            "output": self.output.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Genome":
        try:
            hidden = tuple(np.array(layer, dtype=np.float64) for layer in data["hidden"])
            return cls(hidden, np.array(data["output"], dtype=np.float64),
                       int(data["du"]), int(data["dy"]))
        except KeyError as exc:
            raise StructureError(f"genome record lacks field {exc}") from None


def random_genome(rng: np.random.Generator, layer_sizes: Sequence[int], du: int, dy: int,
                  min_w: float = -1.0, max_w: float = 1.0) -> Genome:
    """Genome of the given architecture with weights uniform in [min_w, max_w]."""
    if not layer_sizes or min(layer_sizes) < 1:
        raise StructureError(f"invalid layer sizes {list(layer_sizes)}")
    layers = []
    fan_in = 1 + du + dy
    for n in layer_sizes:
        layers.append(rng.uniform(min_w, max_w, size=(n, fan_in + 1)))
        fan_in = n
    output = rng.uniform(min_w, max_w, size=fan_in + 1)
    return Genome(tuple(layers), output, du, dy)


def init_genome(config, rng: np.random.Generator) -> Genome:
    """Draw one initial individual for the weight-evolving searches.

    Delay levels come from ``[1, duMax]``/``[1, dyMax]`` unless the
    configuration pins them, every hidden layer gets ``1..maxNinLay`` neurons,
    and all weights are uniform in ``[minW, maxW]``.
    """
    config.validate()
    # draw even when pinned so pinned and free runs consume the same stream
    du = int(rng.integers(min(1, config.duMax), config.duMax + 1))
    dy = int(rng.integers(min(1, config.dyMax), config.dyMax + 1))
    if config.delays_pinned:
        du, dy = config.du, config.dy
    sizes = [int(rng.integers(1, config.maxNinLay + 1)) for _ in range(config.maxLay)]
    return random_genome(rng, sizes, du, dy, config.minW, config.maxW)


@njit(cache=True, nogil=True)
def _closed_loop(flat, sizes, du, dy, u, u0, y0):
    n = u.shape[0]
    out = np.empty(n)
    n_layers = sizes.shape[0] - 1
    width = 0
    for i in range(sizes.shape[0]):
        if sizes[i] > width:
            width = sizes[i]
    a = np.empty(width)
    b = np.empty(width)
    for k in range(n):
        a[0] = u[k]
        for i in range(1, du + 1):
            a[i] = u[k - i] if k - i >= 0 else u0
        for i in range(1, dy + 1):
            a[du + i] = out[k - i] if k - i >= 0 else y0
        pos = 0
        for layer in range(n_layers):
            fan_in = sizes[layer]
            n_out = sizes[layer + 1]
            last = layer == n_layers - 1
            for j in range(n_out):
                s = flat[pos + fan_in]
                for i in range(fan_in):
                    s += flat[pos + i] * a[i]
                pos += fan_in + 1
                b[j] = s if last else np.tanh(s)
            for j in range(n_out):
                a[j] = b[j]
        y = a[0]
        if not np.isfinite(y):
            return out[:k], False
        out[k] = y
    return out, True


class SimulationDiverged(ArithmeticError):
    """A closed-loop response produced a non-finite value."""


def simulate_closed_loop(genome: Genome, inputs, nominal_input: float = 0.0,
                         nominal_output: float = 0.0) -> np.ndarray:
    """Run the network in free-run mode, feeding back its own outputs.

    Delayed samples before the first input are filled with the nominal input
    and output values.  Raises :class:`SimulationDiverged` if any response
    sample becomes non-finite.
    """
    u = np.ascontiguousarray(inputs, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("inputs must be a non-empty 1-D sequence")
    out, ok = _closed_loop(genome.flat, genome.sizes, genome.du, genome.dy, u,
                           float(nominal_input), float(nominal_output))
    if not ok:
        raise SimulationDiverged(f"non-finite response at sample {out.size}")
    return out
