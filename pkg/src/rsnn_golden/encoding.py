"""Spike encoders for the three case studies and the spike-count readout.

Spike trains are ``(T, 3)`` uint8 arrays: row t holds the three input bits
presented at timestep t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CHANNELS = 3
MNIST_SIDE = 28
MNIST_SEGMENT = 262  # (784 + 2 padding pixels) / 3
MNIST_THRESHOLD = 128


class EncodingError(ValueError):
    pass


def encode_constant(bits: Sequence[int], timesteps: int) -> np.ndarray:
    """Two-input code: channel i fires every step iff ``bits[i]``; channel 2 idle."""
    if timesteps < 1:
        raise EncodingError("timesteps must be >= 1")
    if len(bits) != 2:
        raise EncodingError("expected two input bits")
    train = np.zeros((timesteps, CHANNELS), dtype=np.uint8)
    for i, b in enumerate(bits):
        if b:
            train[:, i] = 1
    return train


def encode_rate(features: Sequence[float], timesteps: int) -> np.ndarray:
    """Deterministic rate code: spike at t iff floor((t+1)f) > floor(tf)."""
    if timesteps < 1:
        raise EncodingError("timesteps must be >= 1")
    if len(features) != CHANNELS:
        raise EncodingError(f"expected {CHANNELS} features")
    train = np.zeros((timesteps, CHANNELS), dtype=np.uint8)
    for i, f in enumerate(features):
        f = float(f)
        if not 0.0 <= f <= 1.0:
            raise EncodingError(f"feature {f} outside [0, 1]")
        prev = 0
        for t in range(timesteps):
            cur = math.floor((t + 1) * f)
            if cur > prev:
                train[t, i] = 1
            prev = cur
    return train


def encode_mnist_sequential(image: np.ndarray) -> np.ndarray:
    """Top/middle/bottom thirds of a padded 28x28 image, one per channel."""
    image = np.asarray(image)
    if image.shape != (MNIST_SIDE, MNIST_SIDE):
        raise EncodingError(f"expected a 28x28 image, got shape {image.shape}")
    flat = np.zeros(CHANNELS * MNIST_SEGMENT, dtype=np.int64)
    flat[:MNIST_SIDE * MNIST_SIDE] = image.reshape(-1)
    return (flat.reshape(CHANNELS, MNIST_SEGMENT).T >= MNIST_THRESHOLD).astype(np.uint8)


@dataclass(frozen=True)
class Prediction:
    counts: tuple[int, ...]
    label: int


def argmax_first(counts: Sequence[float]) -> int:
    best = 0
    for i, c in enumerate(counts):
        if c > counts[best]:
            best = i
    return best


def decode_prediction(output: np.ndarray, classes: int = CHANNELS) -> Prediction:
    """Spike-count readout; ties go to the lowest channel index.

    ``output`` is ``(T, channels)``; only the first ``classes`` channels vote.
    """
    output = np.asarray(output)
    counts = tuple(int(c) for c in output.sum(axis=0))
    return Prediction(counts, argmax_first(counts[:classes]))
