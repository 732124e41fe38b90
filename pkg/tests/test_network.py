import random

from hypothesis import given, settings, strategies as st

from rsnn_golden.network import (
    LayerParams,
    NetworkParams,
    NetworkState,
    identity_probe_params,
    layer_step,
    network_step,
    run,
    weighted_input,
)
from rsnn_golden.neuron import LifState, NeuronParams

i8 = st.integers(-128, 127)
bits3 = st.tuples(*[st.integers(0, 1)] * 3)


def random_params(rng):
    layers = []
    for _ in range(3):
        w = tuple(tuple(rng.randint(-128, 127) for _ in range(3)) for _ in range(3))
        shared = NeuronParams(rng.randint(-40, 127), rng.randint(-8, 16),
                              rng.choice([0, 0, 1, 3]), rng.randint(-128, 127))
        layers.append(LayerParams(w, shared))
    return NetworkParams(tuple(layers))


def test_weighted_input_examples():
    assert weighted_input((0, 0, 0), (5, -7, 100)) == 0
    assert weighted_input((1, 1, 1), (100, 100, 100)) == 127
    assert weighted_input((1, 0, 1), (-100, 50, -100)) == -128
    assert weighted_input((0, 1, 0), (3, -7, 9)) == -7


@given(bits3, st.tuples(i8, i8, i8))
def test_weighted_input_single_saturation(spikes, weights):
    total = sum(s * w for s, w in zip(spikes, weights))
    assert weighted_input(spikes, weights) == max(-128, min(127, total))


def test_layer_reset():
    layer = random_params(random.Random(0)).layers[0]
    states = (LifState(5, 1, 1), LifState(-3, 0, 0), LifState(100, 0, 1))
    assert layer_step((1, 1, 1), states, layer, 1, 1) == (LifState(),) * 3


def test_layer_zero_weights_never_spike():
    layer = LayerParams(((0,) * 3,) * 3, NeuronParams(threshold=127, decay=1))
    states = (LifState(),) * 3
    for _ in range(100):
        states = layer_step((1, 1, 1), states, layer)
        assert all(st_.spike_reg == 0 for st_ in states)
        assert all(abs(st_.membrane) <= 1 for st_ in states)


def test_layer_identity_probe():
    layer = identity_probe_params().layers[0]
    states = (LifState(),) * 3
    fired = []
    for _ in range(10):
        states = layer_step((1, 0, 0), states, layer)
        fired.append(tuple(s.spike_reg for s in states))
    assert fired[0] == (0, 0, 0)
    assert fired[1] == (1, 0, 0)
    assert all(f[1] == f[2] == 0 for f in fired)


def test_all_zero_params():
    # threshold 0 at rest satisfies 0 >= 0, so zero params fire whenever enabled
    params = NetworkParams.zeros()
    rng = random.Random(3)
    seq = [tuple(rng.randint(0, 1) for _ in range(3)) for _ in range(20)]
    assert run(params, seq) == [(1, 1, 1)] * 20
    state = NetworkState.zeros()
    for s in seq:
        state, out = network_step(s, state, params, enable=0)
        assert out == (0, 0, 0)


def test_zero_threshold_fires_every_cycle():
    params = NetworkParams.uniform(((0,) * 3,) * 3, NeuronParams(threshold=0))
    outs = run(params, [(0, 0, 0)] * 6)
    assert outs == [(1, 1, 1)] * 6


def test_impulse_latency_two_cycles_per_layer():
    outs = run(identity_probe_params(), [(1, 0, 0)] * 12)
    first = next(t for t, o in enumerate(outs) if o[0])
    assert first == 5  # the 6th enabled cycle
    assert all(o[1] == o[2] == 0 for o in outs)


def test_output_is_new_registered_spikes_of_last_layer():
    rng = random.Random(7)
    params = random_params(rng)
    state = NetworkState.zeros()
    for _ in range(50):
        state, out = network_step((rng.randint(0, 1),) * 3, state, params)
        assert out == state.spikes(2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_causality(seed, cut):
    rng = random.Random(seed)
    params = random_params(rng)
    seq = [tuple(rng.randint(0, 1) for _ in range(3)) for _ in range(40)]
    other = seq[:cut] + [tuple(1 - b for b in s) for s in seq[cut:]]
    assert run(params, seq)[:cut] == run(params, other)[:cut]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2))
def test_layer_isolation(seed, layer):
    rng = random.Random(seed)
    params = random_params(rng)
    layers = list(params.layers)
    layers[layer] = LayerParams(((0,) * 3,) * 3, layers[layer].shared)
    params = NetworkParams(tuple(layers))

    def layer_spikes(seq):
        state = NetworkState.zeros()
        out = []
        for s in seq:
            state, _ = network_step(s, state, params)
            out.append(state.spikes(layer))
        return out

    a = [tuple(rng.randint(0, 1) for _ in range(3)) for _ in range(40)]
    b = [tuple(rng.randint(0, 1) for _ in range(3)) for _ in range(40)]
    assert layer_spikes(a) == layer_spikes(b)


def test_shapes():
    params = random_params(random.Random(1))
    assert params.weight_count == 27
    assert params.shape == (3, 3)
    state = NetworkState.zeros()
    assert len(state.layers) == 3 and all(len(l) == 3 for l in state.layers)
