"""Spiking convolutional classifier: rate-mode training, spiking-mode inference.

Geometry for an ``S x S`` input (``S`` divisible by 8)::

    (S,S,1) -conv3x3-> (S,S,8) -pool-> (S/2,S/2,8) -conv-> (S/2,S/2,16) -pool->
    (S/4,S/4,16) -conv-> (S/4,S/4,32) -pool-> (S/8,S/8,32) -flatten-dense-> 7

Every convolution is followed by a LIF nonlinearity and 2x2 average pooling.
Training replaces the LIF units by their smoothed rate curve; inference runs
the real spiking dynamics and reads out leak-free integrator voltages.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

from .lif import LifParams, LifState, soft_lif_rate_and_grad

NUM_CLASSES = 7
CHANNELS = (1, 8, 16, 32)
FULL_INPUT = 128
REDUCED_INPUT = 32
SCN_MAGIC = b"SCN1"
# per-layer init scale; the hidden layers start with enough gain that
# most units sit above threshold, the readout stays at unit scale
INIT_GAINS = (3.0, 10.0, 10.0, 1.0)
PARAM_NAMES = (
    "conv1_w", "conv1_b", "conv2_w", "conv2_b", "conv3_w", "conv3_b", "dense_w", "dense_b"
)


class ShapeError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


def expected_shapes(input_size: int, num_classes: int = NUM_CLASSES) -> dict[str, tuple]:
    if input_size <= 0 or input_size % 8:
        raise ShapeError(f"input size {input_size} must be a positive multiple of 8")
    shapes = {}
    for i in range(3):
        shapes[f"conv{i + 1}_w"] = (3, 3, CHANNELS[i], CHANNELS[i + 1])
        shapes[f"conv{i + 1}_b"] = (CHANNELS[i + 1],)
    flat = (input_size // 8) ** 2 * CHANNELS[-1]
    shapes["dense_w"] = (flat, num_classes)
    shapes["dense_b"] = (num_classes,)
    return shapes


@dataclass(eq=False)
class ScnnParams:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    conv3_w: np.ndarray
    conv3_b: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        shapes = expected_shapes(self.input_size, self.dense_b.shape[0])
        for name in PARAM_NAMES:
            got = getattr(self, name).shape
            if got != shapes[name]:
                raise ShapeError(f"{name} has shape {got}, expected {shapes[name]}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def input_size(self) -> int:
        per_side = self.dense_w.shape[0] // CHANNELS[-1]
        side = int(round(np.sqrt(per_side)))
        if side * side * CHANNELS[-1] != self.dense_w.shape[0]:
            raise ShapeError(f"dense input {self.dense_w.shape[0]} is not (S/8)^2 * 32")
        return side * 8

    @classmethod
    def initialize(
        cls,
        input_size: int = FULL_INPUT,
        seed: int = 0,
        gains: Sequence[float] = INIT_GAINS,
    ) -> "ScnnParams":
        """Centered uniform weights with half-width ``gain/sqrt(fan_in)``; zero biases.

        ``gains`` holds one factor per weight layer (conv1, conv2, conv3, dense).
        """
        if len(gains) != 4:
            raise ValueError("need one gain per weight layer")
        rng = np.random.default_rng(seed)
        arrays = {}
        layer = 0
        for name, shape in expected_shapes(input_size).items():
            if name.endswith("_b"):
                arrays[name] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[:-1]))
                bound = gains[layer] / np.sqrt(fan_in)
                arrays[name] = rng.uniform(-bound, bound, size=shape)
                layer += 1
        return cls(**arrays)

    @classmethod
    def zeros(cls, input_size: int = FULL_INPUT) -> "ScnnParams":
        return cls(**{n: np.zeros(s) for n, s in expected_shapes(input_size).items()})

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in PARAM_NAMES]

    def copy(self) -> "ScnnParams":
        return ScnnParams(*(a.copy() for a in self.arrays()))

    def allclose(self, other: "ScnnParams", **kw) -> bool:
        return all(np.allclose(a, b, **kw) for a, b in zip(self.arrays(), other.arrays()))


# --------------------------------------------------------------------------- layers


def _im2col(x: np.ndarray) -> np.ndarray:
    """(N,H,W,C) -> (N,H,W,9C) patches for a 3x3 'same' correlation."""
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    return np.concatenate([xp[:, r : r + h, s : s + w, :] for r in range(3) for s in range(3)], axis=-1)


def _col2im(dcols: np.ndarray, c: int) -> np.ndarray:
    n, h, w, _ = dcols.shape
    dxp = np.zeros((n, h + 2, w + 2, c))
    for tap in range(9):
        r, s = divmod(tap, 3)
        dxp[:, r : r + h, s : s + w, :] += dcols[..., tap * c : (tap + 1) * c]
    return dxp[:, 1:-1, 1:-1, :]


def _conv(x, w, b):
    cols = _im2col(x)
    return cols @ w.reshape(-1, w.shape[-1]) + b, cols


def _pool(x):
    n, h, w, c = x.shape
    return x.reshape(n, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))


def _unpool(dy):
    return np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2) / 4.0


def _as_batch(frames: np.ndarray, input_size: int) -> np.ndarray:
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim == 3:
        x = x[..., None]
    if x.ndim != 4 or x.shape[1:] != (input_size, input_size, 1):
        raise ShapeError(
            f"expected frames of shape ({input_size}, {input_size}), got {np.shape(frames)}"
        )
    return x


# --------------------------------------------------------------------------- rate mode


def _forward(params: ScnnParams, lif: LifParams, x: np.ndarray, keep: bool = False):
    cache = []
    h = x
    for i in range(3):
        w, b = getattr(params, f"conv{i + 1}_w"), getattr(params, f"conv{i + 1}_b")
        j, cols = _conv(h, w, b)
        rate, drate = soft_lif_rate_and_grad(j, lif)
        if keep:
            cache.append((cols, drate, h.shape[-1]))
        h = _pool(rate)
    flat = h.reshape(len(h), -1)
    scores = flat @ params.dense_w + params.dense_b
    return scores, (cache, flat, h.shape)


def forward_rate(params: ScnnParams, lif: LifParams, batch: np.ndarray) -> np.ndarray:
    """Class scores (N, 7) of the rate-approximated network."""
    x = _as_batch(batch, params.input_size)
    return _forward(params, lif, x)[0]


def softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


PROB_FLOOR = 1e-12


def nll_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true labels; probabilities floored at 1e-12."""
    probs = np.atleast_2d(probs)
    labels = np.asarray(labels)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def loss_and_grad(
    params: ScnnParams, lif: LifParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, ScnnParams]:
    x = _as_batch(batch, params.input_size)
    labels = np.asarray(labels)
    m = len(labels)
    scores, (cache, flat, pooled_shape) = _forward(params, lif, x, keep=True)
    probs = softmax(scores)
    loss = nll_loss(probs, labels)

    dscores = probs.copy()
    dscores[np.arange(m), labels] -= 1.0
    dscores /= m
    grads = {"dense_w": flat.T @ dscores, "dense_b": dscores.sum(axis=0)}
    dh = (dscores @ params.dense_w.T).reshape(pooled_shape)
    for i in reversed(range(3)):
        cols, drate, c_in = cache[i]
        w = getattr(params, f"conv{i + 1}_w")
        dj = _unpool(dh) * drate
        f = w.shape[-1]
        dj_flat = dj.reshape(-1, f)
        grads[f"conv{i + 1}_w"] = (cols.reshape(-1, cols.shape[-1]).T @ dj_flat).reshape(w.shape)
        grads[f"conv{i + 1}_b"] = dj_flat.sum(axis=0)
        if i > 0:
            dh = _col2im(dj @ w.reshape(-1, f).T, c_in)
    return loss, ScnnParams(**grads)


# --------------------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    batch_size: int = 20
    learning_rate: float = 1e-3
    seed: int = 0
    gamma_final: float = 0.02
    optimizer: str = "adam"  # or "sgd"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate < 0:
            raise ValueError("invalid training configuration")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def gamma_schedule(self, gamma_start: float) -> list[float]:
        if self.epochs <= 1:
            return [gamma_start] * self.epochs
        ratio = self.gamma_final / gamma_start
        return [gamma_start * ratio ** (e / (self.epochs - 1)) for e in range(self.epochs)]


@dataclass
class TrainResult:
    params: ScnnParams
    lif: LifParams  # neuron constants at the end of the gamma schedule
    initial_loss: float
    epoch_losses: list[float] = field(default_factory=list)


class DataError(ValueError):
    pass


def dataset_loss(params, lif, frames, labels, chunk: int = 50) -> float:
    total = 0.0
    for start in range(0, len(labels), chunk):
        sl = slice(start, start + chunk)
        probs = softmax(forward_rate(params, lif, frames[sl]))
        total += nll_loss(probs, labels[sl]) * len(labels[sl])
    return total / len(labels)


def _adam_stepper(params: ScnnParams, lr: float, b1=0.9, b2=0.999, eps=1e-8):
    m = [np.zeros_like(a) for a in params.arrays()]
    v = [np.zeros_like(a) for a in params.arrays()]
    t = 0

    def step(grads: ScnnParams) -> None:
        nonlocal t
        t += 1
        for p, g, mi, vi in zip(params.arrays(), grads.arrays(), m, v):
            mi *= b1
            mi += (1 - b1) * g
            vi *= b2
            vi += (1 - b2) * g * g
            p -= lr * (mi / (1 - b1**t)) / (np.sqrt(vi / (1 - b2**t)) + eps)

    return step


def train(
    frames: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig = TrainConfig(),
    lif: LifParams = LifParams(),
    params: ScnnParams | None = None,
) -> TrainResult:
    """Mini-batch gradient descent on the rate model's NLL loss; deterministic given ``cfg.seed``."""
    frames = np.asarray(frames)
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DataError("empty training split")
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = ScnnParams.initialize(frames.shape[-1], seed=int(rng.integers(2**31)))
    else:
        params = params.copy()
    initial = dataset_loss(params, lif, frames, labels)
    history = []
    cur_lif = lif
    step = _adam_stepper(params, cfg.learning_rate) if cfg.optimizer == "adam" else None
    for gamma in cfg.gamma_schedule(lif.gamma):
        cur_lif = lif.with_gamma(gamma)
        order = rng.permutation(len(labels))
        losses, sizes = [], []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grad(params, cur_lif, frames[idx], labels[idx])
            if step is not None:
                step(grads)
            else:
                for name in PARAM_NAMES:
                    getattr(params, name)[...] -= cfg.learning_rate * getattr(grads, name)
            losses.append(loss)
            sizes.append(len(idx))
        history.append(float(np.average(losses, weights=sizes)))
    return TrainResult(params, cur_lif, initial, history)


# --------------------------------------------------------------------------- spiking mode


@dataclass
class InferenceTrace:
    voltages: np.ndarray  # (timesteps, 7)
    predicted: int


def spiking_voltages(
    params: ScnnParams, lif: LifParams, frames: np.ndarray, timesteps: int = 60
) -> np.ndarray:
    """Output integrator voltages, shape (N, timesteps, 7).

    The frame is a constant input current. Hidden layers are LIF populations;
    pooled spike trains reach the next convolution through an exponential
    synapse (``lif.tau_syn``). The output units accumulate
    ``dt * (dense(spikes) + bias)`` from the last layer's raw spikes, with no leak.
    """
    x = _as_batch(frames, params.input_size)
    n = len(x)
    drive1 = _conv(x, params.conv1_w, params.conv1_b)[0]
    states = [LifState(drive1.shape, lif)]
    side = params.input_size
    synapses = []
    for i in (1, 2):
        side //= 2
        synapses.append(np.zeros((n, side, side, CHANNELS[i])))
        states.append(LifState((n, side, side, CHANNELS[i + 1]), lif))
    alpha = lif.synapse_alpha
    v_out = np.zeros((n, params.dense_b.shape[0]))
    trace = np.empty((n, timesteps, v_out.shape[1]))
    for t in range(timesteps):
        s = _pool(states[0].step(drive1))
        for i in (1, 2):
            syn = synapses[i - 1]
            syn += alpha * (s - syn)
            w, b = getattr(params, f"conv{i + 1}_w"), getattr(params, f"conv{i + 1}_b")
            s = _pool(states[i].step(_conv(syn, w, b)[0]))
        v_out += lif.dt * (s.reshape(n, -1) @ params.dense_w + params.dense_b)
        trace[:, t] = v_out
    return trace


def argmax_lowest(values: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties resolve to the lowest index."""
    return np.argmax(values, axis=-1)


def spiking_infer(
    params: ScnnParams, lif: LifParams, frame: np.ndarray, timesteps: int = 60
) -> InferenceTrace:
    v = spiking_voltages(params, lif, np.asarray(frame)[None], timesteps)[0]
    return InferenceTrace(v, int(argmax_lowest(v[-1])))


def predict_spiking(params, lif, frames, timesteps: int = 60, chunk: int = 20) -> np.ndarray:
    preds = [
        argmax_lowest(spiking_voltages(params, lif, frames[i : i + chunk], timesteps)[:, -1])
        for i in range(0, len(frames), chunk)
    ]
    return np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)


def predict_rate(params, lif, frames, chunk: int = 50) -> np.ndarray:
    preds = [
        argmax_lowest(forward_rate(params, lif, frames[i : i + chunk]))
        for i in range(0, len(frames), chunk)
    ]
    return np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)


@dataclass
class EvalResult:
    accuracy: float  # percent
    confusion: np.ndarray  # (7, 7), rows = true class, columns = predicted

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


def confusion_matrix(labels, predicted, num_classes: int = NUM_CLASSES) -> np.ndarray:
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels), np.asarray(predicted)), 1)
    return cm


def score_predictions(labels, predicted, num_classes: int = NUM_CLASSES) -> EvalResult:
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DataError("cannot evaluate an empty split")
    cm = confusion_matrix(labels, predicted, num_classes)
    return EvalResult(100.0 * np.trace(cm) / len(labels), cm)


def evaluate(params, lif, frames, labels, timesteps: int = 60) -> EvalResult:
    return score_predictions(labels, predict_spiking(params, lif, frames, timesteps))


# --------------------------------------------------------------------------- checkpoints


def save_checkpoint(params: ScnnParams, sink: BinaryIO) -> int:
    """``SCN1`` | u32 array count | per array: u32 ndim, u32 dims | float32 data."""
    arrays = params.arrays()
    header = [SCN_MAGIC, struct.pack("<I", len(arrays))]
    for a in arrays:
        header.append(struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape))
    payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in arrays)
    blob = b"".join(header) + payload
    sink.write(blob)
    return len(blob)


def load_checkpoint(source: BinaryIO, input_size: int | None = None) -> ScnnParams:
    """Read a checkpoint, validating the shape table against the network geometry."""
    if source.read(4) != SCN_MAGIC:
        raise CheckpointError("bad checkpoint magic")

    def read_u32(k=1):
        raw = source.read(4 * k)
        if len(raw) != 4 * k:
            raise CheckpointError("truncated checkpoint header")
        return struct.unpack(f"<{k}I", raw)

    (count,) = read_u32()
    if count != len(PARAM_NAMES):
        raise CheckpointError(f"expected {len(PARAM_NAMES)} arrays, found {count}")
    shapes = []
    for _ in range(count):
        (ndim,) = read_u32()
        shapes.append(read_u32(ndim))
    flat = shapes[PARAM_NAMES.index("dense_w")][0]
    side = int(round(np.sqrt(flat / CHANNELS[-1]))) * 8
    if input_size is not None and side != input_size:
        raise CheckpointError(f"checkpoint is for {side}x{side} inputs, expected {input_size}")
    try:
        want = expected_shapes(side)
    except ShapeError as exc:
        raise CheckpointError(str(exc)) from exc
    arrays = {}
    for name, shape in zip(PARAM_NAMES, shapes):
        if tuple(shape) != want[name]:
            raise CheckpointError(f"{name} shape {shape} does not match geometry {want[name]}")
        n = int(np.prod(shape))
        raw = source.read(4 * n)
        if len(raw) != 4 * n:
            raise CheckpointError(f"truncated data for {name}")
        arrays[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    if source.read(1):
        raise CheckpointError("trailing bytes in checkpoint")
    return ScnnParams(**arrays)


def quantize(params: ScnnParams) -> ScnnParams:
    """Round weights through float32, i.e. what a checkpoint round trip yields."""
    return ScnnParams(*(a.astype(np.float32).astype(np.float64) for a in params.arrays()))
