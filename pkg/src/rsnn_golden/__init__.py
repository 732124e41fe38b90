"""Bit-exact golden model of a programmable 3-layer x 3-neuron recurrent
spiking neural network, with training, quantization and HDL generation."""

from .fixedpoint import leak_term, potential_update, saturate8, to_signed, wrap8
from .neuron import LifState, NeuronParams, lif_step, rlif_step
from .network import (
    LayerParams,
    NetworkParams,
    NetworkState,
    identity_probe_params,
    layer_step,
    network_step,
    weighted_input,
)
from .device import DevicePins, DeviceState, Mode, ParameterImage, device_tick, fipo_shift_in

__all__ = [
    "DevicePins",
    "DeviceState",
    "LayerParams",
    "LifState",
    "Mode",
    "NetworkParams",
    "NetworkState",
    "NeuronParams",
    "ParameterImage",
    "device_tick",
    "fipo_shift_in",
    "identity_probe_params",
    "layer_step",
    "leak_term",
    "lif_step",
    "network_step",
    "potential_update",
    "rlif_step",
    "saturate8",
    "to_signed",
    "weighted_input",
    "wrap8",
]
