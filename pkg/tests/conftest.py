import random
from pathlib import Path

import pytest

from rsnn_golden.device import DevicePins, ParameterImage, load_sequence
from rsnn_golden.network import identity_probe_params

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def golden_dir():
    return GOLDEN


def probe_pins(running_ticks=20, channel0=True):
    """Identity-probe load followed by a constant spike on channel 0."""
    image = ParameterImage.from_params(identity_probe_params())
    spikes = (1, 0, 0) if channel0 else (0, 0, 0)
    run = [DevicePins(enable=1, spikeIN_reg_enable=1, spike_in=spikes)] * running_ticks
    return load_sequence(image) + run


def random_pins(rng: random.Random, n: int, image: bytes | None = None):
    """Random stimulus: a (possibly interrupted) load, then random running pins."""
    pins = []
    if image is not None:
        for b in image:
            pins.append(DevicePins(load_params=1, param_in=b,
                                   spike_in=tuple(rng.randint(0, 1) for _ in range(3)),
                                   spikeIN_reg_enable=rng.randint(0, 1), enable=rng.randint(0, 1)))
    while len(pins) < n:
        pins.append(DevicePins(
            reset=int(rng.random() < 0.003),
            enable=int(rng.random() < 0.85),
            load_params=int(rng.random() < 0.3),
            param_in=rng.randint(0, 255),
            spikeIN_reg_enable=int(rng.random() < 0.7),
            spike_in=tuple(rng.randint(0, 1) for _ in range(3)),
        ))
    return pins


def random_image(rng: random.Random) -> bytes:
    out = bytearray()
    for _ in range(3):
        out.extend(rng.randint(0, 255) for _ in range(9))
        out.append(rng.randint(0, 90))          # threshold, mostly positive
        out.append(rng.randint(0, 12) & 0xFF)   # decay
        out.append(rng.choice([0, 0, 1, 2, 5]))  # refractory
        out.append(rng.randint(0, 255))          # feedback
    return bytes(out)
