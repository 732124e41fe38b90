"""Cycle-accurate leaky integrate-and-fire neuron.

Each step function is one rising clock edge of the RTL neuron.  Every read
uses the pre-edge (old) state, as with nonblocking assignments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fixedpoint import I8_MAX, I8_MIN, potential_update, saturate8, wrap8


def _check_i8(name: str, value: int) -> None:
    if not I8_MIN <= value <= I8_MAX:
        raise ValueError(f"{name}={value} outside signed 8-bit range")


@dataclass(frozen=True, slots=True)
class NeuronParams:
    threshold: int = 0
    decay: int = 0
    refractory_period: int = 0
    feedback_scale: int = 0

    def __post_init__(self) -> None:
        _check_i8("threshold", self.threshold)
        _check_i8("decay", self.decay)
        _check_i8("feedback_scale", self.feedback_scale)
        if not 0 <= self.refractory_period <= 255:
            raise ValueError(f"refractory_period={self.refractory_period} outside 0..255")


@dataclass(frozen=True, slots=True)
class LifState:
    membrane: int = 0
    refractory_counter: int = 0
    spike_reg: int = 0


ZERO_STATE = LifState()


def _step(state: LifState, input_current: int, params: NeuronParams, enable: int,
          reset: int, feedback: int) -> LifState:
    if reset:
        return ZERO_STATE
    if not enable:
        # spike_reg is cleared by the unconditional default assignment
        return LifState(state.membrane, state.refractory_counter, 0)
    if state.refractory_counter > 0:
        return LifState(state.membrane, state.refractory_counter - 1, 0)
    if state.membrane >= params.threshold:
        # the saturated candidate is overwritten: input and feedback dropped
        return LifState(wrap8(state.membrane - params.threshold), params.refractory_period, 1)
    candidate = saturate8(potential_update(state.membrane, input_current, params.decay, feedback))
    return LifState(candidate, 0, 0)


def lif_step(state: LifState, input_current: int, params: NeuronParams,
             enable: int = 1, reset: int = 0) -> LifState:
    """Plain LIF transition; ``params.feedback_scale`` is ignored."""
    return _step(state, input_current, params, enable, reset, 0)


def rlif_step(state: LifState, input_current: int, params: NeuronParams,
              enable: int = 1, reset: int = 0) -> LifState:
    """Recurrent LIF: the neuron's own registered spike adds ``feedback_scale``."""
    feedback = params.feedback_scale if state.spike_reg else 0
    return _step(state, input_current, params, enable, reset, feedback)
