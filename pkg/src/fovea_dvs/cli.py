"""Command line entry point: one subcommand per pipeline stage plus ``repro``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline as pl
from . import scnn
from .aer_io import AerFormatError, AerLengthError, CorruptStreamError
from .dog_filters import CELL_TYPES, export_kernel_csv, make_dog_kernel, preset
from .framing import CoverageError
from .lif import LifParams
from .raster import write_raster_csv, write_raster_svg

CELL_CHOICES = [c.replace("_", "-") for c in CELL_TYPES]
EDGE_CHOICES = {"zero": "zero_pad", "circular": "circular"}

# failures that mean "bad input or environment", reported without a traceback
EXPECTED_ERRORS = (
    OSError,
    AerFormatError,
    AerLengthError,
    CorruptStreamError,
    CoverageError,
    scnn.CheckpointError,
    scnn.ShapeError,
    scnn.DataError,
    ValueError,
)


def _cell(name: str | None) -> str | None:
    return None if name is None else name.replace("-", "_")


def _add_synth_flags(p):
    p.add_argument("--classes", type=int, default=7)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--frames", type=int, default=100, help="frames per recording")
    p.add_argument("--frame-period-us", type=int, default=10_000)
    p.add_argument("--threshold-log", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)


def _add_train_flags(p):
    defaults = scnn.TrainConfig()
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.add_argument("--geometry", choices=sorted(pl.GEOMETRIES), default="full")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fovea-dvs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emulate DVS recordings of the moving-bar classes")
    _add_synth_flags(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("filter", help="DoG-filter one recording or a directory of them")
    p.add_argument("input", type=Path)
    p.add_argument("--cell-type", choices=CELL_CHOICES, required=True)
    p.add_argument("--edge-mode", choices=list(EDGE_CHOICES), required=True)
    p.add_argument("--frame-period-us", type=int, default=10_000)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("frames", help="build the labeled frame dataset from recordings")
    p.add_argument("input", type=Path, help="directory of class{k}_rep{r}.aer files")
    _add_synth_flags(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("train", help="train the classifier on a dataset's training split")
    p.add_argument("dataset", type=Path, help="directory written by 'frames'")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")

    p = sub.add_parser("eval", help="spiking-mode accuracy of a checkpoint on the test split")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("dataset", type=Path)
    p.add_argument("--cell-type", choices=CELL_CHOICES, help="label the row; omit for unfiltered")
    p.add_argument("--edge-mode", choices=list(EDGE_CHOICES), default="circular")
    p.add_argument("--geometry", choices=sorted(pl.GEOMETRIES))
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("raster", help="raster CSV and optional SVG of a recording")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True, help="CSV path")
    p.add_argument("--svg", type=Path, help="also draw an SVG raster here")

    p = sub.add_parser("repro", help="all nine accuracy-table scenarios end to end")
    _add_synth_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("kernel", help="export a DoG kernel as CSV")
    p.add_argument("--cell-type", choices=CELL_CHOICES, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _config(args, out: Path) -> pl.PipelineConfig:
    train = scnn.TrainConfig(
        epochs=getattr(args, "epochs", 3),
        batch_size=getattr(args, "batch_size", 20),
        learning_rate=getattr(args, "lr", scnn.TrainConfig().learning_rate),
        seed=args.seed,
    )
    return pl.PipelineConfig(
        out=out,
        classes=getattr(args, "classes", 7),
        reps=getattr(args, "reps", 1),
        frames=getattr(args, "frames", 100),
        frame_period_us=getattr(args, "frame_period_us", 10_000),
        threshold_log=getattr(args, "threshold_log", 0.3),
        seed=args.seed,
        train=train,
        geometry=getattr(args, "geometry", None) or "full",
    )


def cmd_synth(args) -> None:
    cfg = _config(args, args.out)
    for path, n in pl.synth(cfg, args.out):
        print(f"{path.name}: {n} events")


def cmd_filter(args) -> None:
    cell, mode = _cell(args.cell_type), EDGE_CHOICES[args.edge_mode]
    if args.input.is_dir():
        pairs = [(p, args.out / p.name) for p, _, _ in pl.recording_files(args.input)]
        if not pairs:
            raise FileNotFoundError(f"no class*_rep*.aer files in {args.input}")
    else:
        pairs = [(args.input, args.out)]
    for src, dst in pairs:
        n_in, n_out = pl.filter_file(src, dst, cell, mode, args.frame_period_us)
        print(f"{src.name}: {n_in} events in, {n_out} events out")


def cmd_frames(args) -> None:
    ds = pl.make_dataset(args.input, args.out, _config(args, args.out))
    print(f"{len(ds)} frames ({int(ds.is_test.sum())} test) -> {args.out / pl.DATASET_FILE}")


def cmd_train(args) -> None:
    cfg = _config(args, args.out.parent)
    ds = pl.load_dataset(args.dataset)
    result = pl.train_model(ds, cfg, args.out)
    losses = " ".join(f"{v:.4f}" for v in result.epoch_losses)
    print(f"initial loss {result.initial_loss:.4f}; epoch losses {losses}")


def cmd_eval(args) -> None:
    size = pl.GEOMETRIES[args.geometry] if args.geometry else None
    params = pl.load_model(args.checkpoint, size)
    ds = pl.load_dataset(args.dataset)
    result = pl.evaluate_model(params, ds, LifParams())
    scenario = pl.Scenario(_cell(args.cell_type), EDGE_CHOICES[args.edge_mode] if args.cell_type else None)
    args.out.mkdir(parents=True, exist_ok=True)
    pl.write_report([(scenario, result.accuracy)], args.out / pl.REPORT_FILE)
    pl.write_confusion(result, args.out / pl.CONFUSION_FILE)
    print(f"{scenario.key}: {result.accuracy:.1f}%")


def cmd_raster(args) -> None:
    stream = pl.read_stream(args.input)
    with open(args.out, "w", newline="") as fh:
        n = write_raster_csv(stream, fh)
    if args.svg is not None:
        with open(args.svg, "wb") as fh:
            write_raster_svg(stream, fh, title=args.input.name)
    print(f"{n} events")


def cmd_repro(args) -> None:
    cfg = _config(args, args.out)
    pl.repro(cfg, log=print)
    print(f"report -> {args.out / pl.REPORT_FILE}")


def cmd_kernel(args) -> None:
    kernel = make_dog_kernel(preset(_cell(args.cell_type)))
    with open(args.out, "w", newline="") as fh:
        export_kernel_csv(kernel, fh)
    print(f"{kernel.dim}x{kernel.dim} kernel -> {args.out}")


COMMANDS = {
    "synth": cmd_synth,
    "filter": cmd_filter,
    "frames": cmd_frames,
    "train": cmd_train,
    "eval": cmd_eval,
    "raster": cmd_raster,
    "repro": cmd_repro,
    "kernel": cmd_kernel,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
