import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from narxnas.config import NasConfig, table_defaults
from narxnas.genome import (ActivationKind, Genome, SimulationDiverged, StructureError,
                            init_genome, random_genome, required_weights, simulate_closed_loop)
from narxnas.training import _forward


def test_required_weights_examples():
    assert required_weights(1, [4], 5, 5) == 12
    assert required_weights(2, [4], 5, 5) == 5
    assert required_weights(1, [3], 0, 0) == 2
    assert required_weights(3, [4, 7], 1, 1) == 8


@pytest.mark.parametrize("index", [0, 4, -1])
def test_required_weights_out_of_range(index):
    with pytest.raises(StructureError):
        required_weights(index, [4, 2], 1, 1)


def test_init_dnas1_pins_delays():
    cfg = table_defaults("dnas1")
    for seed in range(20):
        g = init_genome(cfg, np.random.default_rng(seed))
        assert (g.du, g.dy) == (5, 5)
        assert 1 <= g.neuron_count <= cfg.maxNinLay


def test_init_free_delays_within_range():
    cfg = table_defaults("dnas2").replace(duMax=4, dyMax=3)
    seen = set()
    for seed in range(200):
        g = init_genome(cfg, np.random.default_rng(seed))
        assert 1 <= g.du <= 4 and 1 <= g.dy <= 3
        seen.add((g.du, g.dy))
    assert len(seen) == 12


def test_init_degenerate_ranges():
    g = init_genome(NasConfig(maxNinLay=1), np.random.default_rng(0))
    assert g.layer_sizes == (1,)
    g = init_genome(NasConfig(minW=0.5, maxW=0.5), np.random.default_rng(1))
    assert np.all(g.flat == 0.5)


def test_init_rejects_bad_config():
    with pytest.raises(ValueError):
        init_genome(NasConfig(minW=1.0, maxW=-1.0), np.random.default_rng(0))


def test_activation_tags():
    g = random_genome(np.random.default_rng(0), [3, 2], 1, 2)
    assert all(n.activation is ActivationKind.BIPOLAR_SIGMOID_HIDDEN
               for layer in g.hidden_layers for n in layer)
    assert g.output_neuron.activation is ActivationKind.LINEAR_OUTPUT
    assert g.output_neuron.bias == g.output[-1]


def test_structure_validation():
    with pytest.raises(StructureError):
        Genome((np.zeros((2, 4)),), np.zeros(3), 1, 2)  # needs 5 first-layer weights
    with pytest.raises(StructureError):
        Genome((np.zeros((2, 4)),), np.zeros(4), 1, 1)  # output needs 3
    with pytest.raises(StructureError):
        Genome((), np.zeros(1), 0, 0)
    with pytest.raises(StructureError):
        Genome((np.zeros((1, 2)),), np.zeros(2), -1, 1)


def test_genome_is_immutable():
    g = random_genome(np.random.default_rng(0), [2], 1, 1)
    with pytest.raises(ValueError):
        g.hidden[0][0, 0] = 3.0
    with pytest.raises(ValueError):
        g.flat[0] = 1.0


def test_dict_round_trip_and_with_flat():
    g = random_genome(np.random.default_rng(4), [3, 2], 2, 1)
    assert Genome.from_dict(g.to_dict()).same_as(g)
    h = g.with_flat(g.flat * 2)
    assert h.layer_sizes == g.layer_sizes and np.allclose(h.flat, 2 * g.flat)
    with pytest.raises(StructureError):
        g.with_flat(np.zeros(3))
    with pytest.raises(StructureError):
        Genome.from_dict({"du": 1})


def test_zero_genome_outputs_zero():
    g = Genome((np.zeros((3, 5)),), np.zeros(4), 2, 1)
    y = simulate_closed_loop(g, np.linspace(-2, 2, 17), 0.3, 0.9)
    assert np.all(y == 0.0)


def test_constant_output_genome():
    g = Genome((np.zeros((1, 2)),), np.array([1.0, 0.7]), 0, 0)
    assert np.all(simulate_closed_loop(g, np.arange(9.0)) == 0.7)


def test_two_neuron_unrolled_oracle():
    w = [[0.5, -0.3, 0.2, 0.1], [-0.4, 0.25, 0.6, -0.05]]
    v = [0.7, -0.2, 0.3]
    u = [1.0] * 5
    # independent step-by-step recurrence
    ys = []
    for k in range(5):
        u1 = u[k - 1] if k else 0.0
        y1 = ys[k - 1] if k else 0.0
        h = [math.tanh(r[0] * u[k] + r[1] * u1 + r[2] * y1 + r[3]) for r in w]
        ys.append(v[0] * h[0] + v[1] * h[1] + v[2])
    golden = [0.7603144979486263, 0.5463698134600697, 0.5460731710573669,
              0.5460729103096874, 0.5460729100804733]
    assert ys == pytest.approx(golden, abs=1e-15)
    g = Genome((np.array(w),), np.array(v), 1, 1)
    assert simulate_closed_loop(g, u) == pytest.approx(golden, abs=1e-14)


def test_nominal_history_seeding():
    # y(k) = u(k-1) + y(k-1) through a near-linear tanh: sample 0 sees only the nominal values
    g = Genome((np.array([[0.0, 1e-3, 1e-3, 0.0]]),), np.array([1e3, 0.0]), 1, 1)
    y = simulate_closed_loop(g, [5.0, 5.0], nominal_input=0.2, nominal_output=0.3)
    assert y[0] == pytest.approx(0.5, rel=1e-5)


def test_divergence_is_reported():
    g = Genome((np.array([[0.0, 0.0, 3.0]]),), np.array([1e308, 1e308]), 0, 1)
    with pytest.raises(SimulationDiverged):
        simulate_closed_loop(g, np.ones(10))


def test_empty_inputs_rejected():
    g = random_genome(np.random.default_rng(0), [1], 0, 0)
    with pytest.raises(ValueError):
        simulate_closed_loop(g, [])


@st.composite
def genomes(draw):
    n_layers = draw(st.integers(1, 3))
    sizes = [draw(st.integers(1, 4)) for _ in range(n_layers)]
    du, dy = draw(st.integers(0, 4)), draw(st.integers(0, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    scale = draw(st.floats(0.1, 5.0))
    return random_genome(np.random.default_rng(seed), sizes, du, dy, -scale, scale)


@settings(max_examples=60, deadline=None)
@given(genomes(), st.integers(1, 40), st.integers(0, 1000))
def test_simulation_properties(g, n, seed):
    u = np.random.default_rng(seed).uniform(-2, 2, n)
    y1 = simulate_closed_loop(g, u, 0.1, 0.4)
    y2 = simulate_closed_loop(g, u, 0.1, 0.4)
    assert y1.shape == u.shape
    assert np.array_equal(y1, y2)


@settings(max_examples=60, deadline=None)
@given(genomes(), st.integers(0, 1000))
def test_hidden_activations_bounded(g, seed):
    x = np.random.default_rng(seed).normal(0, 10, (20, 1 + g.du + g.dy))
    _, acts = _forward(g, x)
    for a in acts[1:]:
        assert np.all(np.abs(a) <= 1.0)
