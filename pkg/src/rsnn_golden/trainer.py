"""Surrogate-gradient training of a float mirror of the network, 8-bit
quantization, and evaluation on either the float model or the emulator.

The float model follows the integer datapath step for step, minus the
saturation: the threshold check reads the previous membrane, a spiking step
subtracts the threshold and drops the input, the leak is a constant
``-sign(U) * d`` with sign(0) = +1, and the registered spike feeds back with
weight ``V`` on the next step.  Layer l reads layer l-1's spikes one step late.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .datasets import LabeledSet
from .device import ParameterImage
from .encoding import (
    MNIST_SEGMENT,
    argmax_first,
    encode_constant,
    encode_mnist_sequential,
    encode_rate,
)
from .network import LAYERS, NEURONS, LayerParams, NetworkParams, NetworkState, network_step
from .neuron import NeuronParams


class DivergenceError(ArithmeticError):
    pass


# -- tasks ----------------------------------------------------------------

@dataclass(frozen=True)
class Task:
    name: str
    classes: int
    timesteps: int
    encode: Callable[[object, int], np.ndarray]


def _encode_bits(x, timesteps):
    return encode_constant(x, timesteps)


def _encode_rate(x, timesteps):
    return encode_rate(x, timesteps)


def _encode_mnist(x, timesteps):
    return encode_mnist_sequential(x)


TASKS = {
    "xor": Task("xor", 2, 16, _encode_bits),
    "iris": Task("iris", 3, 32, _encode_rate),
    "mnist3": Task("mnist3", 3, MNIST_SEGMENT, _encode_mnist),
    "mnist2": Task("mnist2", 2, MNIST_SEGMENT, _encode_mnist),
}


def get_task(task: str | Task) -> Task:
    if isinstance(task, Task):
        return task
    try:
        return TASKS[task]
    except KeyError:
        raise ValueError(f"unknown task {task!r}; choose from {sorted(TASKS)}") from None


def encode_set(data: LabeledSet, task: Task, timesteps: int | None = None) -> np.ndarray:
    """Stack the encoded samples into a ``(B, T, 3)`` float array."""
    if data.class_count != task.classes:
        raise ValueError(f"task {task.name} needs {task.classes} classes, data has {data.class_count}")
    t = timesteps or task.timesteps
    return np.stack([task.encode(x, t) for x, _ in data.samples]).astype(np.float64)


# -- float model ----------------------------------------------------------

@dataclass
class FloatModel:
    weights: np.ndarray      # (L, N, N), weights[l, n, i]: input i -> neuron n
    threshold: np.ndarray    # (L,)
    decay: np.ndarray        # (L,)
    feedback: np.ndarray     # (L,)
    timesteps: int = 16

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        L, N, _ = self.weights.shape
        self.threshold = np.asarray(self.threshold, dtype=np.float64).reshape(L)
        self.decay = np.asarray(self.decay, dtype=np.float64).reshape(L)
        self.feedback = np.asarray(self.feedback, dtype=np.float64).reshape(L)
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise DivergenceError("divergence: non-finite model parameter")

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape[0], self.weights.shape[1]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.weights, self.threshold, self.decay, self.feedback

    def copy(self) -> "FloatModel":
        return FloatModel(*(a.copy() for a in self.arrays()), timesteps=self.timesteps)

    @classmethod
    def zeros(cls, layers: int = LAYERS, neurons: int = NEURONS, timesteps: int = 16) -> "FloatModel":
        return cls(np.zeros((layers, neurons, neurons)), np.zeros(layers), np.zeros(layers),
                   np.zeros(layers), timesteps)

    @classmethod
    def from_params(cls, params: NetworkParams, timesteps: int = 16) -> "FloatModel":
        w = np.array([layer.weights for layer in params.layers], dtype=np.float64)
        sh = [layer.shared for layer in params.layers]
        return cls(w, [s.threshold for s in sh], [s.decay for s in sh],
                   [s.feedback_scale for s in sh], timesteps)

    def to_dict(self) -> dict:
        return {"timesteps": self.timesteps, "weights": self.weights.tolist(),
                "threshold": self.threshold.tolist(), "decay": self.decay.tolist(),
                "feedback": self.feedback.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FloatModel":
        return cls(d["weights"], d["threshold"], d["decay"], d["feedback"], d["timesteps"])


def fast_sigmoid_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return 1.0 / (1.0 + slope * np.abs(x)) ** 2


def fast_sigmoid(x: np.ndarray, slope: float) -> np.ndarray:
    """Soft step whose derivative is exactly :func:`fast_sigmoid_grad`."""
    return 0.5 + x / (1.0 + slope * np.abs(x))


@dataclass
class _LayerCache:
    x: np.ndarray       # (B, T, N) input spikes
    z: np.ndarray       # (B, T, N) pre-spike membrane minus threshold
    s: np.ndarray       # (B, T, N) spikes
    sg: np.ndarray      # (B, T, N) leak sign (+1 for U >= 0)
    keep: np.ndarray    # (B, T, N) 1 where the candidate membrane was not clipped
    ds: np.ndarray      # (B, T, N) dU(t)/dS(t): (U - theta) - candidate
    cur_keep: np.ndarray  # (B, T, N) 1 where the layer input was not clipped


@dataclass
class ForwardCache:
    layers: list[_LayerCache] = field(default_factory=list)
    smooth: float | None = None


def saturation_bounds(model: FloatModel) -> np.ndarray:
    """Per-layer (lo, hi) real range matching [-128, 127] after quantization."""
    peak = 127.0 / layer_scales(model)
    return np.stack([-128.0 / 127.0 * peak, peak], axis=1)


def _layer_forward(x: np.ndarray, w: np.ndarray, theta: float, d: float, v: float,
                   smooth: float | None, bounds: tuple[float, float] | None = None) -> _LayerCache:
    B, T, N = x.shape
    current = x @ w.T
    if bounds is None:
        cur_keep = np.ones_like(current)
    else:
        lo, hi = bounds
        cur_keep = ((current >= lo) & (current <= hi)).astype(np.float64)
        current = np.clip(current, lo, hi)
    z = np.empty((B, T, N))
    s = np.empty((B, T, N))
    sg = np.empty((B, T, N))
    keep = np.ones((B, T, N))
    ds = np.empty((B, T, N))
    u = np.zeros((B, N))
    s_prev = np.zeros((B, N))
    for t in range(T):
        zt = u - theta
        st = (zt >= 0).astype(np.float64) if smooth is None else fast_sigmoid(zt, smooth)
        sgt = np.where(u >= 0, 1.0, -1.0)
        cand = u + current[:, t] - d * sgt + v * s_prev
        if bounds is not None:
            keep[:, t] = (cand >= lo) & (cand <= hi)
            cand = np.clip(cand, lo, hi)
        ds[:, t] = zt - cand
        u = (1.0 - st) * cand + st * zt
        z[:, t], s[:, t], sg[:, t] = zt, st, sgt
        s_prev = st
    if not np.all(np.isfinite(u)):
        raise DivergenceError("divergence: non-finite membrane")
    return _LayerCache(x, z, s, sg, keep, ds, cur_keep)


def forward_batch(model: FloatModel, x: np.ndarray, smooth: float | None = None,
                  saturate: bool = False) -> tuple[np.ndarray, ForwardCache]:
    """Run ``x`` of shape ``(B, T, N)``; returns per-channel output counts
    ``(B, N)``.  ``smooth`` replaces the hard step by :func:`fast_sigmoid`
    with that slope (used to check gradients).  ``saturate`` clips the layer
    input and the candidate membrane to :func:`saturation_bounds`, as the
    integer datapath does after quantization."""
    cache = ForwardCache(smooth=smooth)
    bounds = saturation_bounds(model) if saturate else [None] * model.shape[0]
    inp = np.asarray(x, dtype=np.float64)
    for l in range(model.shape[0]):
        lc = _layer_forward(inp, model.weights[l], model.threshold[l], model.decay[l],
                            model.feedback[l], smooth, bounds[l])
        cache.layers.append(lc)
        inp = np.zeros_like(lc.s)
        inp[:, 1:] = lc.s[:, :-1]
    return cache.layers[-1].s.sum(axis=1), cache


def float_forward(model: FloatModel, spikes: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Single-sample forward: ``spikes`` is ``(T, N)``."""
    spikes = np.asarray(spikes)
    if spikes.ndim != 2 or len(spikes) == 0:
        raise ValueError("spike trains must be a non-empty (T, channels) array")
    counts, cache = forward_batch(model, spikes[None])
    return counts[0], cache


def backward(model: FloatModel, cache: ForwardCache, grad_counts: np.ndarray,
             slope: float) -> FloatModel:
    """Backprop-through-time of ``grad_counts`` (dLoss/dcounts, ``(B, N)``).

    The spike step's derivative is replaced by the fast-sigmoid surrogate;
    the leak sign and the saturation bounds are held constant.  Returns the
    gradients as a FloatModel.
    """
    L, N = model.shape
    gw = np.zeros_like(model.weights)
    gth, gd, gv = np.zeros(L), np.zeros(L), np.zeros(L)
    B, T, _ = cache.layers[-1].s.shape
    g_ext = np.broadcast_to(grad_counts[:, None, :], (B, T, N)).copy()
    for l in reversed(range(L)):
        c = cache.layers[l]
        v = model.feedback[l]
        g_current = np.empty((B, T, N))
        gu = np.zeros((B, N))
        ga_next = np.zeros((B, N))
        sgrad = fast_sigmoid_grad(c.z, slope)
        for t in reversed(range(T)):
            st = c.s[:, t]
            gs = g_ext[:, t] + v * ga_next + gu * c.ds[:, t]
            gz = gs * sgrad[:, t]
            ga = gu * (1.0 - st) * c.keep[:, t]
            gth[l] -= np.sum(gz + gu * st)
            gd[l] -= np.sum(ga * c.sg[:, t])
            if t > 0:
                gv[l] += np.sum(ga * c.s[:, t - 1])
            g_current[:, t] = ga
            gu = ga + gu * st + gz
            ga_next = ga
        g_current *= c.cur_keep
        gw[l] = np.einsum("btn,bti->ni", g_current, c.x)
        if l > 0:
            gx = g_current @ model.weights[l]
            g_ext = np.zeros((B, T, N))
            g_ext[:, :-1] = gx[:, 1:]
    return FloatModel(gw, gth, gd, gv, model.timesteps)


def cross_entropy(counts: np.ndarray, labels: np.ndarray, classes: int,
                  logit_scale: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over the first ``classes`` count channels,
    and its gradient with respect to all count channels."""
    logits = counts[:, :classes] * logit_scale
    logits = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    B = len(labels)
    loss = -np.mean(np.log(p[np.arange(B), labels] + 1e-300))
    grad = np.zeros_like(counts)
    p[np.arange(B), labels] -= 1.0
    grad[:, :classes] = p * logit_scale / B
    return float(loss), grad


def loss_and_grad(model: FloatModel, x: np.ndarray, labels: np.ndarray, classes: int,
                  slope: float, logit_scale: float = 1.0,
                  smooth: float | None = None, saturate: bool = False) -> tuple[float, FloatModel]:
    counts, cache = forward_batch(model, x, smooth=smooth, saturate=saturate)
    loss, g = cross_entropy(counts, labels, classes, logit_scale)
    if not math.isfinite(loss):
        raise DivergenceError("divergence: non-finite loss")
    return loss, backward(model, cache, g, slope)


# -- training -------------------------------------------------------------

@dataclass
class TrainConfig:
    task: str = "xor"
    lr: float = 1e-3
    epochs: int = 200
    batch_size: int = 32
    slope: float = 25.0
    seed: int = 0
    timesteps: int | None = None
    # multiplies the output counts before the softmax
    logit_scale: float = 1.0
    # keep the epoch whose quantized model scores best on the training data
    select_quantized: bool = True
    # train through the integer saturation points (see forward_batch)
    saturate: bool = False
    # initial weights ~ U(init_w_low, 1), initial decay
    init_w_low: float = -0.5
    init_decay: float = 0.02

    def __post_init__(self) -> None:
        get_task(self.task)
        if self.lr < 0 or self.epochs < 0 or self.batch_size < 1 or self.slope <= 0:
            raise ValueError("lr/epochs must be >= 0, batch_size >= 1, slope > 0")
        if self.logit_scale <= 0:
            raise ValueError("logit_scale must be > 0")


# Tuned per task on training-split accuracy; TrainConfig's own defaults stay generic.
TASK_DEFAULTS = {
    "xor": dict(lr=1e-2, epochs=300, batch_size=4),
    "iris": dict(lr=1e-2, epochs=200, batch_size=16, slope=5.0, logit_scale=0.3),
    "mnist3": dict(lr=1e-2, epochs=60, batch_size=64, slope=5.0, logit_scale=0.1,
                   saturate=True, init_decay=0.3),
    "mnist2": dict(lr=1e-2, epochs=30, batch_size=64, slope=5.0, logit_scale=0.1,
                   saturate=True),
}


def task_config(task: str, **overrides) -> TrainConfig:
    """TrainConfig with the tuned values for ``task``, then ``overrides``."""
    get_task(task)
    return TrainConfig(task=task, **{**TASK_DEFAULTS[task], **overrides})


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1 - self.beta1 ** self.t
        bc2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def init_model(rng: np.random.Generator, timesteps: int, layers: int = LAYERS,
               neurons: int = NEURONS, w_low: float = -0.5, decay: float = 0.02) -> FloatModel:
    w = rng.uniform(w_low, 1.0, size=(layers, neurons, neurons))
    return FloatModel(w, np.ones(layers), np.full(layers, decay), np.zeros(layers), timesteps)


def train(task: str | Task, config: TrainConfig, data: LabeledSet,
          init: FloatModel | None = None, log: Callable[[str], None] | None = None) -> FloatModel:
    """Fit a FloatModel with Adam on minibatch cross-entropy of output counts."""
    task = get_task(task)
    if len(data) == 0:
        raise ValueError("empty data")
    timesteps = config.timesteps or task.timesteps
    x = encode_set(data, task, timesteps)
    y = data.labels
    rng = np.random.default_rng(config.seed)
    model = init.copy() if init is not None else init_model(
        rng, timesteps, w_low=config.init_w_low, decay=config.init_decay)
    model.timesteps = timesteps
    opt = Adam(config.lr)

    best, best_key = model.copy(), (-1.0, -1.0)
    for epoch in range(config.epochs):
        order = rng.permutation(len(y))
        losses = []
        for start in range(0, len(y), config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grad = loss_and_grad(model, x[idx], y[idx], task.classes, config.slope,
                                       config.logit_scale, saturate=config.saturate)
            losses.append(loss)
            opt.step(model.arrays(), grad.arrays())
            if not all(np.all(np.isfinite(a)) for a in model.arrays()):
                raise DivergenceError("divergence: non-finite parameter update")
        if config.select_quantized:
            acc = batch_accuracy(quantize(model)[0], x, y, task.classes)
            float_pred = np.argmax(forward_batch(model, x, saturate=config.saturate)[0]
                                   [:, :task.classes], axis=1)
            key = (acc, float(np.mean(float_pred == y)))
            if key > best_key:
                best, best_key = model.copy(), key
        if log is not None:
            log(f"epoch {epoch} loss {np.mean(losses):.4f}"
                + (f" quant_train_acc {acc:.3f}" if config.select_quantized else ""))
    return best if config.select_quantized else model


# -- quantization ---------------------------------------------------------

def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def layer_scales(model: FloatModel, eps: float = 1e-12) -> np.ndarray:
    scales = np.ones(model.shape[0])
    for l in range(model.shape[0]):
        peak = max(np.max(np.abs(model.weights[l])), abs(model.threshold[l]),
                   abs(model.decay[l]), abs(model.feedback[l]))
        if peak > eps:
            scales[l] = 127.0 / peak
    return scales


def quantize(model: FloatModel) -> tuple[NetworkParams, ParameterImage]:
    """Per-layer scale so the largest magnitude maps to 127, then round."""
    if not all(np.all(np.isfinite(a)) for a in model.arrays()):
        raise ValueError("cannot quantize a non-finite model")
    layers = []
    for l, s in enumerate(layer_scales(model)):
        def q(v):
            return np.clip(round_half_away(np.asarray(v) * s), -128, 127).astype(int)
        w = q(model.weights[l])
        shared = NeuronParams(threshold=int(q(model.threshold[l])), decay=int(q(model.decay[l])),
                              refractory_period=0, feedback_scale=int(q(model.feedback[l])))
        layers.append(LayerParams(tuple(map(tuple, w.tolist())), shared))
    params = NetworkParams(tuple(layers))
    return params, ParameterImage.from_params(params)


# -- evaluation -----------------------------------------------------------

def emulate_counts(params: NetworkParams, spikes: np.ndarray) -> tuple[int, ...]:
    """Output spike counts from the bit-exact emulator, starting at reset."""
    layers, neurons = params.shape
    state = NetworkState.zeros(layers, neurons)
    counts = [0] * neurons
    for row in np.asarray(spikes, dtype=int).tolist():
        state, out = network_step(row, state, params)
        for i, b in enumerate(out):
            counts[i] += b
    return tuple(counts)


def batch_integer_counts(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Vectorized integer emulation of ``x`` (B, T, N), refractory included.

    Equivalent to running :func:`emulate_counts` per sample; used for fast
    checkpoint selection during training.
    """
    B, T, N = x.shape
    xi = np.asarray(x, dtype=np.int64)
    inp = xi
    for layer in params.layers:
        w = np.array(layer.weights, dtype=np.int64)
        sh = layer.shared
        current = np.clip(inp @ w.T, -128, 127)
        u = np.zeros((B, N), dtype=np.int64)
        rc = np.zeros((B, N), dtype=np.int64)
        s_prev = np.zeros((B, N), dtype=np.int64)
        out = np.zeros((B, T, N), dtype=np.int64)
        for t in range(T):
            frozen = rc > 0
            fire = ~frozen & (u >= sh.threshold)
            leak = np.where(u < 0, sh.decay, -sh.decay)
            cand = np.clip(u + current[:, t] + leak + sh.feedback_scale * s_prev, -128, 127)
            fired_u = ((u - sh.threshold + 128) % 256) - 128
            u = np.where(frozen, u, np.where(fire, fired_u, cand))
            rc = np.where(frozen, rc - 1, np.where(fire, sh.refractory_period, 0))
            s_prev = fire.astype(np.int64)
            out[:, t] = s_prev
        inp = np.zeros_like(out)
        inp[:, 1:] = out[:, :-1]
    return out.sum(axis=1)


def batch_accuracy(params: NetworkParams, x: np.ndarray, y: np.ndarray, classes: int) -> float:
    counts = batch_integer_counts(params, x)
    pred = np.array([argmax_first(c[:classes]) for c in counts.tolist()])
    return float(np.mean(pred == y))


def evaluate(model: NetworkParams | FloatModel, data: LabeledSet, task: str | Task,
             timesteps: int | None = None) -> float:
    """Fraction of samples whose spike-count argmax matches the label."""
    task = get_task(task)
    if isinstance(model, FloatModel):
        timesteps = timesteps or model.timesteps
    x = encode_set(data, task, timesteps)
    if isinstance(model, FloatModel):
        counts = forward_batch(model, x)[0].tolist()
    else:
        counts = [emulate_counts(model, sample) for sample in x]
    correct = sum(argmax_first(c[:task.classes]) == y for c, (_, y) in zip(counts, data.samples))
    return correct / len(data)


def predictions(model: NetworkParams | FloatModel, data: LabeledSet, task: str | Task,
                timesteps: int | None = None) -> list[int]:
    task = get_task(task)
    if isinstance(model, FloatModel):
        timesteps = timesteps or model.timesteps
    x = encode_set(data, task, timesteps)
    if isinstance(model, FloatModel):
        counts = forward_batch(model, x)[0].tolist()
    else:
        counts = [emulate_counts(model, sample) for sample in x]
    return [argmax_first(c[:task.classes]) for c in counts]


def save_artifacts(out_dir: str | Path, model: FloatModel, config: TrainConfig) -> ParameterImage:
    """Write ``params.bin``, ``params.hex`` and the ``model.json`` sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, image = quantize(model)
    image.write(out_dir / "params.bin")
    image.write(out_dir / "params.hex")
    sidecar = {"model": model.to_dict(), "config": asdict(config)}
    (out_dir / "model.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return image
