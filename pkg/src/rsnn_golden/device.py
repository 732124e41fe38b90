"""Pin-level model of the top module.

Holds the FIPO parameter memory, the byte-counting load FSM, a two-flop
synchronizer on each asynchronous input, the input spike register and the
network.  ``device_tick`` is one rising clock edge.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from .fixedpoint import to_signed, to_unsigned
from .network import LAYERS, NEURONS, Bits, LayerParams, NetworkParams, NetworkState, network_step
from .neuron import NeuronParams

SHARED_BYTES = 4  # threshold, decay, refractory_period, feedback_scale


class FipoWarning(RuntimeWarning):
    pass


def image_size(layers: int = LAYERS, neurons: int = NEURONS) -> int:
    return layers * (neurons * neurons + SHARED_BYTES)


@dataclass(frozen=True)
class ParameterImage:
    """Serialized network parameters in FIPO order.

    Layer-major; per layer the weights row by row (``weights[n][0..N-1]`` for
    each neuron n), then threshold, decay, refractory_period, feedback_scale.
    The 3x3 network gives 39 bytes.
    """

    data: bytes
    layers: int = LAYERS
    neurons: int = NEURONS

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", bytes(self.data))
        expected = image_size(self.layers, self.neurons)
        if len(self.data) != expected:
            raise ValueError(f"parameter image must be {expected} bytes, got {len(self.data)}")

    @classmethod
    def from_params(cls, params: NetworkParams) -> "ParameterImage":
        out = bytearray()
        for layer in params.layers:
            for row in layer.weights:
                out.extend(to_unsigned(w) for w in row)
            s = layer.shared
            out.extend((to_unsigned(s.threshold), to_unsigned(s.decay),
                        s.refractory_period, to_unsigned(s.feedback_scale)))
        layers, neurons = params.shape
        return cls(bytes(out), layers, neurons)

    def to_params(self) -> NetworkParams:
        n = self.neurons
        per_layer = n * n + SHARED_BYTES
        layers = []
        for base in range(0, len(self.data), per_layer):
            chunk = self.data[base:base + per_layer]
            weights = tuple(tuple(to_signed(b) for b in chunk[r * n:(r + 1) * n]) for r in range(n))
            th, dc, rp, fb = chunk[n * n:]
            shared = NeuronParams(to_signed(th), to_signed(dc), rp, to_signed(fb))
            layers.append(LayerParams(weights, shared))
        return NetworkParams(tuple(layers))

    def to_hex(self) -> str:
        return "".join(f"{b:02X}\n" for b in self.data)

    @classmethod
    def from_hex(cls, text: str, layers: int = LAYERS, neurons: int = NEURONS) -> "ParameterImage":
        values = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if len(line) != 2:
                raise ValueError(f"line {lineno}: expected one two-digit hex byte, got {line!r}")
            values.append(int(line, 16))
        return cls(bytes(values), layers, neurons)

    @classmethod
    def read(cls, path: str | Path, layers: int = LAYERS, neurons: int = NEURONS) -> "ParameterImage":
        """Read a raw binary image, or the hex text form if the suffix is ``.hex``."""
        path = Path(path)
        if path.suffix.lower() == ".hex":
            return cls.from_hex(path.read_text(), layers, neurons)
        return cls(path.read_bytes(), layers, neurons)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix.lower() == ".hex":
            path.write_text(self.to_hex())
        else:
            path.write_bytes(self.data)


@dataclass(frozen=True)
class DevicePins:
    reset: int = 0
    enable: int = 0
    load_params: int = 0
    param_in: int = 0
    spikeIN_reg_enable: int = 0
    spike_in: Bits = (0, 0, 0)


class Mode(enum.Enum):
    STARTUP = 0
    RUNNING = 1


@dataclass(frozen=True)
class DeviceState:
    mode: Mode
    bytes_loaded: int
    fipo: tuple[int, ...]
    # (first flop, second flop) for each synchronized input
    sync_spike_in: tuple[Bits, Bits]
    sync_reg_enable: tuple[int, int]
    spike_in_reg: Bits
    net: NetworkState
    params: NetworkParams
    layers: int = LAYERS
    neurons: int = NEURONS
    bypass_sync: bool = field(default=False, compare=False)

    @classmethod
    def initial(cls, layers: int = LAYERS, neurons: int = NEURONS,
                bypass_sync: bool = False) -> "DeviceState":
        zeros = (0,) * neurons
        return cls(
            mode=Mode.STARTUP,
            bytes_loaded=0,
            fipo=(0,) * image_size(layers, neurons),
            sync_spike_in=(zeros, zeros),
            sync_reg_enable=(0, 0),
            spike_in_reg=zeros,
            net=NetworkState.zeros(layers, neurons),
            params=NetworkParams.zeros(layers, neurons),
            layers=layers,
            neurons=neurons,
            bypass_sync=bypass_sync,
        )

    @property
    def capacity(self) -> int:
        return len(self.fipo)

    def image(self) -> ParameterImage:
        return ParameterImage(bytes(self.fipo), self.layers, self.neurons)


def fipo_shift_in(state: DeviceState, byte: int) -> DeviceState:
    """Shift one byte in at the top; after a full load the first byte sits at
    position 0.  Ignored, with a FipoWarning, once the memory is full."""
    if state.mode is Mode.RUNNING:
        warnings.warn("parameter byte ignored: FIPO already loaded", FipoWarning, stacklevel=2)
        return state
    if not 0 <= byte <= 0xFF:
        raise ValueError(f"param_in={byte} is not a byte")
    fipo = state.fipo[1:] + (byte,)
    loaded = state.bytes_loaded + 1
    if loaded < state.capacity:
        return replace(state, fipo=fipo, bytes_loaded=loaded)
    params = ParameterImage(bytes(fipo), state.layers, state.neurons).to_params()
    return replace(state, fipo=fipo, bytes_loaded=loaded, mode=Mode.RUNNING, params=params)


def device_tick(state: DeviceState, pins: DevicePins) -> tuple[DeviceState, Bits]:
    if pins.reset:
        fresh = DeviceState.initial(state.layers, state.neurons, state.bypass_sync)
        return fresh, fresh.net.spikes(-1)

    spike_in = tuple(pins.spike_in)
    if len(spike_in) != state.neurons:
        raise ValueError(f"spike_in needs {state.neurons} bits")
    if state.bypass_sync:
        seen_spikes, seen_enable = spike_in, pins.spikeIN_reg_enable
        sync_spike_in, sync_reg_enable = state.sync_spike_in, state.sync_reg_enable
    else:
        seen_spikes, seen_enable = state.sync_spike_in[1], state.sync_reg_enable[1]
        sync_spike_in = (spike_in, state.sync_spike_in[0])
        sync_reg_enable = (pins.spikeIN_reg_enable, state.sync_reg_enable[0])

    running = state.mode is Mode.RUNNING
    # the network reads the register value from before this edge
    net, spike_out = network_step(state.spike_in_reg, state.net, state.params,
                                  enable=int(bool(pins.enable) and running))
    spike_in_reg = seen_spikes if (running and seen_enable) else state.spike_in_reg

    new = replace(state, sync_spike_in=sync_spike_in, sync_reg_enable=sync_reg_enable,
                  spike_in_reg=spike_in_reg, net=net)
    if not running and pins.load_params:
        new = fipo_shift_in(new, pins.param_in)
    return new, spike_out


def load_sequence(image: ParameterImage) -> list[DevicePins]:
    """Pins for the startup phase: one byte per tick with load_params high."""
    zeros = (0,) * image.neurons
    return [DevicePins(load_params=1, param_in=b, spike_in=zeros) for b in image.data]
