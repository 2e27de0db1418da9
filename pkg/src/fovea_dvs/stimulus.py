"""Moving vertical-bar stimuli and a frame-clocked DVS pixel emulator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .events import EVENT_DTYPE, EventStream

BAR_COUNTS = (2, 4, 8, 16, 32, 64, 128)
NUM_CLASSES = len(BAR_COUNTS)


@dataclass(frozen=True)
class BarStimulus:
    """Equally wide black and white vertical bars sliding horizontally.

    The pattern wraps around the horizontal edge, so ``width / displacement``
    frames make one full cycle.
    """

    num_bars: int = 2
    width: int = 128
    height: int = 128
    displacement_px_per_frame: int = 2
    num_frames: int = 100
    frame_period_us: int = 10_000
    white_level: float = 1.0
    black_level: float = 0.1

    def __post_init__(self):
        if self.num_bars <= 0 or self.width % self.num_bars:
            raise ValueError(f"num_bars={self.num_bars} must divide width={self.width}")
        if self.black_level <= 0:
            raise ValueError("black_level must be positive for log intensity")
        if self.white_level <= self.black_level:
            raise ValueError("white_level must exceed black_level")
        if self.num_frames <= 0 or self.frame_period_us <= 0:
            raise ValueError("num_frames and frame_period_us must be positive")
        if self.displacement_px_per_frame < 0:
            raise ValueError("displacement must be non-negative")

    @property
    def bar_width(self) -> int:
        return self.width // self.num_bars


@dataclass(frozen=True)
class DvsEmulatorConfig:
    threshold_log: float = 0.3
    seed: int = 0
    # background activity per pixel, Hz; 0 keeps the emulator deterministic
    noise_rate_hz: float = 0.0

    def __post_init__(self):
        if self.threshold_log <= 0:
            raise ValueError("threshold_log must be positive")
        if self.noise_rate_hz < 0:
            raise ValueError("noise_rate_hz must be non-negative")


def render_frame(stim: BarStimulus, frame_idx: int) -> np.ndarray:
    """Luminance grid (height, width) of the bar pattern at ``frame_idx``."""
    if not 0 <= frame_idx < stim.num_frames:
        raise IndexError(f"frame_idx {frame_idx} outside [0, {stim.num_frames})")
    cols = np.arange(stim.width)
    phase = (cols + frame_idx * stim.displacement_px_per_frame) % stim.width
    white = (phase // stim.bar_width) % 2 == 0
    row = np.where(white, stim.white_level, stim.black_level)
    return np.tile(row, (stim.height, 1))


def emulate_frames(
    frames: Iterable[np.ndarray],
    cfg: DvsEmulatorConfig,
    frame_period_us: int = 10_000,
) -> EventStream:
    """Emit change-of-log-luminance events for a sequence of luminance grids.

    The first grid sets each pixel's reference level. At frame ``k`` a pixel
    whose log luminance moved ``d`` from its reference emits ``floor(|d|/theta)``
    events of polarity ``sign(d)`` stamped ``k * frame_period_us``; the
    reference then advances by the quantized amount.
    """
    theta = cfg.threshold_log
    rng = np.random.default_rng(cfg.seed) if cfg.noise_rate_hz > 0 else None
    p_noise = cfg.noise_rate_hz * frame_period_us * 1e-6
    chunks = []
    ref = None
    height = width = 0
    for k, grid in enumerate(frames):
        grid = np.asarray(grid, dtype=np.float64)
        if np.any(grid <= 0):
            raise ValueError("luminance must be positive")
        log_l = np.log(grid).ravel()
        if ref is None:
            height, width = grid.shape
            ref = log_l.copy()
            continue
        d = log_l - ref
        n = np.floor(np.abs(d) / theta).astype(np.int64)
        sign = np.sign(d).astype(np.int8)
        ref += sign * n * theta
        counts = n
        pol_per_pixel = sign
        if rng is not None:
            noisy = rng.random(ref.size) < p_noise
            noise_pol = np.where(rng.random(ref.size) < 0.5, 1, -1).astype(np.int8)
            # noise only fills otherwise silent pixels so counts stay single-signed
            noisy &= counts == 0
            counts = counts + noisy
            pol_per_pixel = np.where(noisy, noise_pol, pol_per_pixel)
        idx = np.repeat(np.arange(ref.size), counts)
        if idx.size == 0:
            continue
        chunk = np.empty(idx.size, dtype=EVENT_DTYPE)
        chunk["t_us"] = k * frame_period_us
        chunk["x"] = idx % width
        chunk["y"] = idx // width
        chunk["polarity"] = pol_per_pixel[idx]
        chunks.append(chunk)
    if ref is None:
        raise ValueError("at least one frame is required")
    events = np.concatenate(chunks) if chunks else np.empty(0, EVENT_DTYPE)
    return EventStream(width, height, events)


def dvs_emulate(stim: BarStimulus, cfg: DvsEmulatorConfig) -> EventStream:
    frames = (render_frame(stim, k) for k in range(stim.num_frames))
    return emulate_frames(frames, cfg, stim.frame_period_us)


def bars_for_label(label_idx: int) -> int:
    if not 0 <= label_idx < NUM_CLASSES:
        raise IndexError(f"label_idx {label_idx} outside [0, {NUM_CLASSES})")
    return 2 ** (label_idx + 1)


def generate_recording(
    label_idx: int,
    cfg: DvsEmulatorConfig | None = None,
    num_frames: int = 100,
    **stim_kwargs,
) -> tuple[EventStream, int]:
    """Emulated recording for class ``label_idx`` (``2**(label_idx+1)`` bars)."""
    cfg = cfg or DvsEmulatorConfig()
    stim = BarStimulus(num_bars=bars_for_label(label_idx), num_frames=num_frames, **stim_kwargs)
    return dvs_emulate(stim, cfg), label_idx
