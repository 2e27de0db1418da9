"""Difference-of-Gaussians ganglion-cell kernels and edge-aware 2D filtering.

Filtering is a same-size cross-correlation::

    out[i, j] = sum_{r,s} k[r, s] * x[i - c + r, j - c + s],   c = (dim - 1) // 2

Taps that fall outside the raster read zero (``"zero_pad"``) or wrap modulo the
raster size (``"circular"``). Both modes are evaluated with FFTs; the direct
loop nest in the tests is the reference they are checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, TextIO

import numpy as np
from scipy import signal

from .events import EVENT_DTYPE, EventStream, validate

EdgeMode = Literal["zero_pad", "circular"]
EDGE_MODES = ("zero_pad", "circular")
DEFAULT_SURROUND_RATIO = 1.6
DEFAULT_THRESHOLD_FRACTION = 0.05


class KernelSpecError(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DogKernelSpec:
    cell_type: str
    mat_dim: int
    cent_dev: float
    sign: int
    surround_ratio: float = DEFAULT_SURROUND_RATIO

    def __post_init__(self):
        if self.mat_dim < 3 or self.mat_dim % 2 == 0:
            raise KernelSpecError(f"mat_dim must be odd and >= 3, got {self.mat_dim}")
        if self.surround_ratio <= 1:
            raise KernelSpecError(f"surround_ratio must exceed 1, got {self.surround_ratio}")
        if self.cent_dev <= 0:
            raise KernelSpecError("cent_dev must be positive")
        if self.sign not in (1, -1):
            raise KernelSpecError("sign must be +1 (on-center) or -1 (off-center)")


# (mat_dim, center standard deviation, sign)
_PRESETS = {
    "off_midget": (5, 0.8, -1),
    "on_midget": (11, 1.04, 1),
    "off_parasol": (61, 8.0, -1),
    "on_parasol": (243, 10.4, 1),
}
CELL_TYPES = tuple(_PRESETS)


def preset(cell_type: str, surround_ratio: float = DEFAULT_SURROUND_RATIO) -> DogKernelSpec:
    key = cell_type.replace("-", "_")
    if key not in _PRESETS:
        raise KernelSpecError(
            f"unknown cell type {cell_type!r}; choose one of {', '.join(CELL_TYPES)}"
        )
    dim, dev, sign = _PRESETS[key]
    return DogKernelSpec(key, dim, dev, sign, surround_ratio)


@dataclass(frozen=True, eq=False)
class Kernel:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise DimensionError(f"kernel must be square with odd side, got {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def _unit_mass_gaussian(dim: int, sigma: float) -> np.ndarray:
    off = np.arange(dim) - (dim - 1) / 2
    d2 = off[:, None] ** 2 + off[None, :] ** 2
    g = np.exp(-d2 / (2.0 * sigma**2))
    return g / g.sum()


def make_dog_kernel(spec: DogKernelSpec) -> Kernel:
    """Zero-sum DoG: each Gaussian is normalized over the truncated support."""
    center = _unit_mass_gaussian(spec.mat_dim, spec.cent_dev)
    surround = _unit_mass_gaussian(spec.mat_dim, spec.surround_ratio * spec.cent_dev)
    return Kernel(spec.sign * (center - surround))


def export_kernel_csv(kernel: Kernel, sink: TextIO) -> None:
    sink.write(f"{kernel.dim}\n")
    for row in kernel.weights:
        sink.write(",".join(repr(float(v)) for v in row) + "\n")


def read_kernel_csv(source: TextIO) -> Kernel:
    dim = int(source.readline())
    rows = [list(map(float, line.split(","))) for line in source if line.strip()]
    if len(rows) != dim:
        raise DimensionError(f"expected {dim} rows, found {len(rows)}")
    return Kernel(np.array(rows))


def _check_fits(kernel: Kernel, shape: tuple[int, int]) -> None:
    if kernel.dim > 2 * min(shape) + 1:
        raise DimensionError(
            f"kernel side {kernel.dim} exceeds 2*min{tuple(shape)}+1 for this raster"
        )


def _fold_to_torus(kernel: Kernel, height: int, width: int) -> np.ndarray:
    """Sum kernel taps into a (height, width) array indexed by offset mod size."""
    c = (kernel.dim - 1) // 2
    rows = (np.arange(kernel.dim) - c) % height
    cols = (np.arange(kernel.dim) - c) % width
    folded = np.zeros((height, width))
    np.add.at(folded, (rows[:, None], cols[None, :]), kernel.weights)
    return folded


def filter_frames(frames: np.ndarray, kernel: Kernel, mode: EdgeMode) -> np.ndarray:
    """Filter a stack ``(..., H, W)`` of rasters; returns float64 of the same shape."""
    frames = np.asarray(frames, dtype=np.float64)
    height, width = frames.shape[-2:]
    _check_fits(kernel, (height, width))
    if mode == "circular":
        folded = _fold_to_torus(kernel, height, width)
        spec = np.fft.rfft2(frames) * np.conj(np.fft.rfft2(folded))
        return np.fft.irfft2(spec, s=(height, width))
    if mode == "zero_pad":
        flipped = kernel.weights[::-1, ::-1]
        flipped = flipped.reshape((1,) * (frames.ndim - 2) + flipped.shape)
        full = signal.fftconvolve(frames, flipped, mode="full", axes=(-2, -1))
        c = (kernel.dim - 1) // 2
        return full[..., c : c + height, c : c + width]
    raise ValueError(f"unknown edge mode {mode!r}; choose one of {EDGE_MODES}")


def filter_frame(frame: np.ndarray, kernel: Kernel, mode: EdgeMode) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise DimensionError(f"expected a 2D raster, got shape {frame.shape}")
    return filter_frames(frame, kernel, mode)


def impulse_peak(kernel: Kernel) -> float:
    """Largest absolute response to a unit impulse, i.e. max |weight|."""
    return float(np.abs(kernel.weights).max())


def filter_stream(
    stream: EventStream,
    spec: DogKernelSpec | Kernel,
    mode: EdgeMode,
    frame_period_us: int = 10_000,
    event_threshold: float | None = None,
) -> EventStream:
    """Frame, filter and re-spike an event stream.

    Each frame window's signed event raster is filtered; every pixel whose
    response magnitude exceeds ``event_threshold`` emits one event of the
    response's sign stamped at the window start. ``event_threshold`` defaults
    to 5% of the kernel's unit-impulse peak.
    """
    from .framing import accumulate

    kernel = spec if isinstance(spec, Kernel) else make_dog_kernel(spec)
    if event_threshold is None:
        event_threshold = DEFAULT_THRESHOLD_FRACTION * impulse_peak(kernel)
    if event_threshold <= 0:
        raise ValueError("event_threshold must be positive")
    problems = validate(stream)
    if problems:
        raise ValueError(f"invalid input stream: {problems[:3]}")
    frames = accumulate(stream, frame_period_us)
    if len(frames) == 0:
        return EventStream(stream.width, stream.height)
    response = filter_frames(frames, kernel, mode)
    k, y, x = np.nonzero(np.abs(response) > event_threshold)
    out = np.empty(k.size, dtype=EVENT_DTYPE)
    out["t_us"] = k.astype(np.uint64) * np.uint64(frame_period_us)
    out["x"] = x
    out["y"] = y
    out["polarity"] = np.sign(response[k, y, x]).astype(np.int8)
    return EventStream(stream.width, stream.height, out)
