"""Event-to-frame accumulation and the labeled, stratified 7-class dataset."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .events import EventStream
from .stimulus import NUM_CLASSES


class CoverageError(ValueError):
    """A required class label has no recording or no frames."""


def accumulate(
    stream: EventStream, frame_period_us: int, num_frames: int | None = None
) -> np.ndarray:
    """Signed (ON minus OFF) event counts per pixel per time window.

    Frame ``k`` covers ``[k*P, (k+1)*P)``. Without ``num_frames`` the count is
    ``ceil((t_max + 1) / P)`` (zero for an empty stream); with it, the tensor is
    exactly that long and later events are an error.
    """
    if frame_period_us <= 0:
        raise ValueError("frame_period_us must be positive")
    ev = stream.events
    if num_frames is None:
        num_frames = 0 if len(ev) == 0 else int(ev["t_us"].max()) // frame_period_us + 1
    plane = stream.width * stream.height
    out = np.zeros((num_frames, stream.height, stream.width), dtype=np.float32)
    if len(ev) == 0:
        return out
    k = (ev["t_us"] // np.uint64(frame_period_us)).astype(np.int64)
    if k.max() >= num_frames:
        raise ValueError(f"events extend past {num_frames} frames")
    flat = k * plane + ev["y"].astype(np.int64) * stream.width + ev["x"].astype(np.int64)
    counts = np.bincount(flat, weights=ev["polarity"].astype(np.float64), minlength=num_frames * plane)
    out[...] = counts.reshape(out.shape)
    return out


def normalize(frames: np.ndarray) -> np.ndarray:
    """Scale the whole tensor by ``1 / max(1, max|value|)``."""
    frames = np.asarray(frames)
    peak = float(np.abs(frames).max()) if frames.size else 0.0
    return frames / max(1.0, peak) if peak > 1.0 else frames.copy()


@dataclass(eq=False)
class Dataset:
    frames: np.ndarray  # (N, H, W) float32
    labels: np.ndarray  # (N,) int64 in 0..6
    is_test: np.ndarray  # (N,) bool
    seed: int

    def __post_init__(self):
        if not (len(self.frames) == len(self.labels) == len(self.is_test)):
            raise ValueError("frames, labels and split must have equal length")

    def __len__(self) -> int:
        return len(self.labels)

    def split(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.is_test if which == "test" else ~self.is_test
        return self.frames[mask], self.labels[mask]

    def write_index_csv(self, sink: TextIO) -> None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["frame_idx", "label", "split"])
        for i, (lab, test) in enumerate(zip(self.labels.tolist(), self.is_test.tolist())):
            writer.writerow([i, lab, "test" if test else "train"])

    @staticmethod
    def read_index_csv(source: TextIO) -> tuple[np.ndarray, np.ndarray]:
        rows = list(csv.DictReader(source))
        labels = np.array([int(r["label"]) for r in rows], dtype=np.int64)
        is_test = np.array([r["split"] == "test" for r in rows], dtype=bool)
        return labels, is_test


def stratified_split(labels: np.ndarray, seed: int) -> np.ndarray:
    """Boolean test mask: per class, a seeded shuffle's last ``max(1, n // 10)``."""
    rng = np.random.default_rng(seed)
    is_test = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        rng.shuffle(idx)
        n_test = max(1, len(idx) // 10)
        is_test[idx[len(idx) - n_test :]] = True
    return is_test


def build_dataset(
    recordings: Sequence[tuple[EventStream, int]],
    frame_period_us: int,
    seed: int,
    num_frames: int | None = None,
    num_classes: int = NUM_CLASSES,
) -> Dataset:
    """Accumulate, normalize and label every recording, then split 9:1 per class.

    ``num_frames`` fixes each recording's frame count, which keeps recordings
    whose pattern never changes (and so emit no events) in the dataset.
    """
    present = {label for _, label in recordings}
    missing = sorted(set(range(num_classes)) - present)
    if missing:
        raise CoverageError(f"no recordings for labels {missing}")
    frames, labels = [], []
    for stream, label in recordings:
        f = normalize(accumulate(stream, frame_period_us, num_frames))
        frames.append(f.astype(np.float32))
        labels.append(np.full(len(f), label, dtype=np.int64))
    labels_all = np.concatenate(labels)
    empty = sorted(set(range(num_classes)) - set(np.unique(labels_all).tolist()))
    if empty:
        raise CoverageError(f"labels {empty} produced no frames; pass num_frames")
    return Dataset(np.concatenate(frames), labels_all, stratified_split(labels_all, seed), seed)


def downsample(frames: np.ndarray, size: int) -> np.ndarray:
    """Block-average ``(N, H, W)`` frames to ``(N, size, size)``; H and W must be multiples."""
    frames = np.asarray(frames)
    n, h, w = frames.shape
    if size <= 0 or h % size or w % size:
        raise ValueError(f"cannot reduce {h}x{w} frames to {size}x{size}")
    fy, fx = h // size, w // size
    return frames.reshape(n, size, fy, size, fx).mean(axis=(2, 4), dtype=np.float64).astype(frames.dtype)
