"""File-level pipeline stages and the nine-scenario accuracy table.

Each stage reads and writes the on-disk artifacts (AER recordings, FRM1
datasets with an index CSV, SCN1 checkpoints, CSV reports), so every stage
can be rerun or inspected on its own.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import aer_io, scnn
from .dog_filters import CELL_TYPES, EDGE_MODES, filter_stream, preset
from .events import EventStream
from .framing import Dataset, build_dataset, downsample
from .lif import LifParams
from .stimulus import NUM_CLASSES, DvsEmulatorConfig, generate_recording

RECORDING_RE = re.compile(r"class(\d+)_rep(\d+)\.aer$")
REPORT_COLUMNS = ("scenario", "cell_type", "circ_shift", "accuracy")
GEOMETRIES = {"full": scnn.FULL_INPUT, "reduced": scnn.REDUCED_INPUT}

DATASET_FILE = "dataset.frm"
INDEX_FILE = "dataset_index.csv"
CHECKPOINT_FILE = "model.scn"
CONFUSION_FILE = "confusion.csv"
REPORT_FILE = "report.csv"


@dataclass(frozen=True)
class Scenario:
    """One row of the accuracy table; ``cell_type is None`` means unfiltered."""

    cell_type: str | None = None
    edge_mode: str | None = None

    @property
    def key(self) -> str:
        return "unfiltered" if self.cell_type is None else f"{self.cell_type}_{self.edge_mode}"

    def row(self, accuracy: float) -> list[str]:
        if self.cell_type is None:
            return ["Unfiltered", "-", "-", f"{accuracy:.1f}"]
        centre, size = self.cell_type.split("_")
        name = f"{centre}-center {size}"
        return ["Filtered", name, "1" if self.edge_mode == "circular" else "0", f"{accuracy:.1f}"]


SCENARIOS = (Scenario(),) + tuple(
    Scenario(cell, mode) for mode in EDGE_MODES for cell in CELL_TYPES
)


@dataclass(frozen=True)
class PipelineConfig:
    out: Path
    classes: int = NUM_CLASSES
    reps: int = 1
    frames: int = 100
    frame_period_us: int = 10_000
    threshold_log: float = 0.3
    seed: int = 0
    train: scnn.TrainConfig = field(default_factory=scnn.TrainConfig)
    lif: LifParams = field(default_factory=LifParams)
    geometry: str = "full"

    def __post_init__(self):
        if not 1 <= self.classes <= NUM_CLASSES:
            raise ValueError(f"classes must be in 1..{NUM_CLASSES}")
        if self.reps < 1 or self.frames < 2:
            raise ValueError("need at least one repetition and two frames")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be one of {sorted(GEOMETRIES)}")

    @property
    def input_size(self) -> int:
        return GEOMETRIES[self.geometry]


def _write_stream(stream: EventStream, path: Path) -> None:
    with open(path, "wb") as fh:
        aer_io.write_events(stream, fh)


def read_stream(path: Path) -> EventStream:
    with open(path, "rb") as fh:
        return aer_io.read_events(fh)


def recording_files(directory: Path) -> list[tuple[Path, int, int]]:
    """``(path, class, rep)`` for every ``class{k}_rep{r}.aer``, ordered by class then rep."""
    found = []
    for path in Path(directory).iterdir():
        m = RECORDING_RE.fullmatch(path.name)
        if m:
            found.append((path, int(m.group(1)), int(m.group(2))))
    return sorted(found, key=lambda t: (t[1], t[2]))


def synth(cfg: PipelineConfig, out_dir: Path) -> list[tuple[Path, int]]:
    """Emulate every (class, rep) recording; returns ``(path, event_count)`` pairs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in range(cfg.classes):
        for r in range(cfg.reps):
            emu = DvsEmulatorConfig(threshold_log=cfg.threshold_log, seed=cfg.seed + r)
            stream, _ = generate_recording(
                k, emu, num_frames=cfg.frames, frame_period_us=cfg.frame_period_us
            )
            path = out_dir / f"class{k}_rep{r}.aer"
            _write_stream(stream, path)
            written.append((path, len(stream)))
    return written


def filter_file(src: Path, dst: Path, cell_type: str, edge_mode: str, frame_period_us: int) -> tuple[int, int]:
    """Filter one recording; returns ``(events_in, events_out)``."""
    stream = read_stream(src)
    out = filter_stream(stream, preset(cell_type), edge_mode, frame_period_us)
    dst.parent.mkdir(parents=True, exist_ok=True)
    _write_stream(out, dst)
    return len(stream), len(out)


def filter_dir(src_dir: Path, dst_dir: Path, cell_type: str, edge_mode: str, frame_period_us: int) -> None:
    for path, _, _ in recording_files(src_dir):
        filter_file(path, dst_dir / path.name, cell_type, edge_mode, frame_period_us)


def make_dataset(src_dir: Path, out_dir: Path, cfg: PipelineConfig) -> Dataset:
    """Frame every recording in ``src_dir`` and write the FRM1 tensor plus index CSV."""
    recs = [(read_stream(path), k) for path, k, _ in recording_files(src_dir)]
    ds = build_dataset(
        recs, cfg.frame_period_us, cfg.seed, num_frames=cfg.frames, num_classes=cfg.classes
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / DATASET_FILE, "wb") as fh:
        aer_io.write_frames(ds.frames, fh)
    with open(out_dir / INDEX_FILE, "w", newline="") as fh:
        ds.write_index_csv(fh)
    return ds


def load_dataset(directory: Path, seed: int = 0) -> Dataset:
    with open(directory / DATASET_FILE, "rb") as fh:
        frames = aer_io.read_frames(fh)
    with open(directory / INDEX_FILE, newline="") as fh:
        labels, is_test = Dataset.read_index_csv(fh)
    if len(labels) != len(frames):
        raise scnn.DataError(f"index lists {len(labels)} frames, tensor holds {len(frames)}")
    return Dataset(frames, labels, is_test, seed)


def model_input(frames: np.ndarray, input_size: int) -> np.ndarray:
    """Bring dataset frames to the network's input size."""
    if frames.shape[-1] == input_size:
        return frames
    return downsample(frames, input_size)


def train_model(ds: Dataset, cfg: PipelineConfig, checkpoint: Path) -> scnn.TrainResult:
    x, y = ds.split("train")
    result = scnn.train(model_input(x, cfg.input_size), y, cfg.train, cfg.lif)
    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    with open(checkpoint, "wb") as fh:
        scnn.save_checkpoint(result.params, fh)
    return result


def load_model(checkpoint: Path, input_size: int | None = None) -> scnn.ScnnParams:
    with open(checkpoint, "rb") as fh:
        return scnn.load_checkpoint(fh, input_size)


def evaluate_model(
    params: scnn.ScnnParams, ds: Dataset, lif: LifParams, split: str = "test"
) -> scnn.EvalResult:
    x, y = ds.split(split)
    if params.input_size != scnn.FULL_INPUT and x.shape[-1] == scnn.FULL_INPUT:
        x = model_input(x, params.input_size)
    if x.shape[-1] != params.input_size:
        raise scnn.ShapeError(
            f"checkpoint expects {params.input_size}x{params.input_size} frames, dataset has {x.shape[1:]}"
        )
    return scnn.evaluate(params, lif, x, y)


def write_confusion(result: scnn.EvalResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\predicted"] + [str(c) for c in range(result.confusion.shape[1])])
        for c, row in enumerate(result.confusion.tolist()):
            writer.writerow([c] + row)


def write_report(rows: Sequence[tuple[Scenario, float]], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for scenario, acc in rows:
            writer.writerow(scenario.row(acc))


def read_report(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_scenario(scenario: Scenario, raw_dir: Path, cfg: PipelineConfig) -> scnn.EvalResult:
    """Filter (unless unfiltered), frame, train, checkpoint and evaluate one scenario."""
    work = cfg.out / scenario.key
    src = raw_dir
    if scenario.cell_type is not None:
        src = work / "events"
        filter_dir(raw_dir, src, scenario.cell_type, scenario.edge_mode, cfg.frame_period_us)
    ds = make_dataset(src, work, cfg)
    train_model(ds, cfg, work / CHECKPOINT_FILE)
    # score the stored float32 weights, not the in-memory float64 ones
    params = load_model(work / CHECKPOINT_FILE, cfg.input_size)
    result = evaluate_model(params, ds, cfg.lif)
    write_confusion(result, work / CONFUSION_FILE)
    return result


def repro(cfg: PipelineConfig, scenarios: Sequence[Scenario] = SCENARIOS, log=None) -> list[tuple[Scenario, float]]:
    """Run every scenario from one shared set of recordings and write ``report.csv``."""
    raw_dir = cfg.out / "raw"
    synth(cfg, raw_dir)
    rows = []
    for scenario in scenarios:
        result = run_scenario(scenario, raw_dir, cfg)
        rows.append((scenario, result.accuracy))
        if log is not None:
            log(f"{scenario.key}: {result.accuracy:.1f}%")
    write_report(rows, cfg.out / REPORT_FILE)
    return rows
