"""Layers of recurrent LIF neurons with registered spike pipelining.

The shapes default to the 3 layer x 3 neuron network.  The functions accept
any rectangular (layers, neurons) shape so the HDL generator can be checked
against other sizes; the first layer has as many input channels as neurons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .fixedpoint import I8_MAX, I8_MIN, saturate8
from .neuron import ZERO_STATE, LifState, NeuronParams, rlif_step

LAYERS = 3
NEURONS = 3

Bits = tuple[int, ...]


@dataclass(frozen=True)
class LayerParams:
    # weights[n][i]: weight from input i to neuron n
    weights: tuple[tuple[int, ...], ...]
    shared: NeuronParams

    def __post_init__(self) -> None:
        weights = tuple(tuple(int(w) for w in row) for row in self.weights)
        object.__setattr__(self, "weights", weights)
        n = len(weights)
        if n == 0 or any(len(row) != n for row in weights):
            raise ValueError("layer weights must be a non-empty square matrix")
        for row in weights:
            for w in row:
                if not I8_MIN <= w <= I8_MAX:
                    raise ValueError(f"weight {w} outside signed 8-bit range")

    @property
    def neurons(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class NetworkParams:
    layers: tuple[LayerParams, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        if len({layer.neurons for layer in layers}) != 1:
            raise ValueError("all layers must have the same width")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.layers), self.layers[0].neurons

    @classmethod
    def zeros(cls, layers: int = LAYERS, neurons: int = NEURONS) -> "NetworkParams":
        row = (0,) * neurons
        layer = LayerParams((row,) * neurons, NeuronParams())
        return cls((layer,) * layers)

    @classmethod
    def uniform(cls, weights: Sequence[Sequence[int]], shared: NeuronParams,
                layers: int = LAYERS) -> "NetworkParams":
        """Same weights and shared parameters in every layer."""
        return cls(tuple(LayerParams(tuple(map(tuple, weights)), shared) for _ in range(layers)))

    @property
    def weight_count(self) -> int:
        return sum(layer.neurons ** 2 for layer in self.layers)


@dataclass(frozen=True)
class NetworkState:
    layers: tuple[tuple[LifState, ...], ...]

    @classmethod
    def zeros(cls, layers: int = LAYERS, neurons: int = NEURONS) -> "NetworkState":
        return cls(((ZERO_STATE,) * neurons,) * layers)

    def spikes(self, layer: int) -> Bits:
        return tuple(s.spike_reg for s in self.layers[layer])

    def membranes(self) -> tuple[int, ...]:
        return tuple(s.membrane for layer in self.layers for s in layer)


def weighted_input(spikes: Sequence[int], weights: Sequence[int]) -> int:
    """Sum of the weights gated by 1-bit spikes, saturated once at the end."""
    total = 0
    for s, w in zip(spikes, weights):
        if s:
            total += w
    return saturate8(total)


def layer_step(spikes_in: Sequence[int], states: Sequence[LifState], params: LayerParams,
               enable: int = 1, reset: int = 0) -> tuple[LifState, ...]:
    shared = params.shared
    return tuple(
        rlif_step(state, weighted_input(spikes_in, row), shared, enable, reset)
        for state, row in zip(states, params.weights)
    )


def network_step(input_spikes: Sequence[int], state: NetworkState, params: NetworkParams,
                 enable: int = 1, reset: int = 0) -> tuple[NetworkState, Bits]:
    """Advance every layer by one clock edge.

    Layer 0 sees ``input_spikes``; layer l > 0 sees the spikes layer l-1
    registered on the previous edge, so each layer adds one cycle of latency.
    """
    new_layers = []
    spikes_in: Sequence[int] = input_spikes
    for states, layer in zip(state.layers, params.layers):
        new_layers.append(layer_step(spikes_in, states, layer, enable, reset))
        spikes_in = tuple(s.spike_reg for s in states)
    new_state = NetworkState(tuple(new_layers))
    return new_state, tuple(s.spike_reg for s in new_layers[-1])


def identity_probe_params(threshold: int = 10, layers: int = LAYERS,
                          neurons: int = NEURONS) -> NetworkParams:
    """Diagonal weights of 127, zero leak and refractory: each layer relays
    channel n to neuron n with a two-cycle (integrate, fire) latency."""
    weights = tuple(tuple(127 if i == n else 0 for i in range(neurons)) for n in range(neurons))
    return NetworkParams.uniform(weights, NeuronParams(threshold=threshold), layers)


def run(params: NetworkParams, inputs: Sequence[Sequence[int]],
        state: NetworkState | None = None) -> list[Bits]:
    """Run a spike sequence from the zero state (or ``state``), enable held high."""
    layers, neurons = params.shape
    if state is None:
        state = NetworkState.zeros(layers, neurons)
    out = []
    for spikes in inputs:
        state, spikes_out = network_step(spikes, state, params)
        out.append(spikes_out)
    return out
