"""Binary event (AER1) and frame (FRM1) files, plus CSV export of events.

AER1 layout, little-endian::

    b"AER1" | width u16 | height u16 | event_count u64 | N x (t u64, x u16, y u16, p i8)

FRM1 layout, little-endian::

    b"FRM1" | count u32 | height u32 | width u32 | count*height*width float32
"""
from __future__ import annotations

import csv
import struct
from typing import BinaryIO, TextIO

import numpy as np

from .events import EVENT_DTYPE, EventStream, validate

AER_MAGIC = b"AER1"
FRM_MAGIC = b"FRM1"
_AER_HEADER = struct.Struct("<4sHHQ")
_FRM_HEADER = struct.Struct("<4sIII")
AER_HEADER_SIZE = _AER_HEADER.size
AER_RECORD_SIZE = EVENT_DTYPE.itemsize
FRM_HEADER_SIZE = _FRM_HEADER.size

assert AER_HEADER_SIZE == 16 and AER_RECORD_SIZE == 13 and FRM_HEADER_SIZE == 16


class AerFormatError(ValueError):
    """Bad magic or malformed header."""


class AerLengthError(ValueError):
    """Payload shorter (or longer) than the header declares."""


class CorruptStreamError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        preview = "; ".join(violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"{len(violations)} violations: {preview}{more}")


class SinkWriteError(OSError):
    def __init__(self, message: str, bytes_written: int):
        super().__init__(message)
        self.bytes_written = bytes_written


def _write_all(sink: BinaryIO, chunks) -> int:
    written = 0
    for chunk in chunks:
        try:
            sink.write(chunk)
        except Exception as exc:
            raise SinkWriteError(f"sink failed after {written} bytes: {exc}", written) from exc
        written += len(chunk)
    return written


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    data = source.read(n)
    if len(data) != n:
        raise AerLengthError(f"truncated {what}: expected {n} bytes, got {len(data)}")
    return data


def write_events(stream: EventStream, sink: BinaryIO) -> int:
    problems = validate(stream)
    if problems:
        raise CorruptStreamError(problems)
    header = _AER_HEADER.pack(AER_MAGIC, stream.width, stream.height, len(stream))
    payload = np.ascontiguousarray(stream.events, dtype=EVENT_DTYPE).tobytes()
    return _write_all(sink, (header, payload))


def read_events(source: BinaryIO) -> EventStream:
    head = source.read(AER_HEADER_SIZE)
    if len(head) < 4 or head[:4] != AER_MAGIC:
        raise AerFormatError(f"bad magic {head[:4]!r}, expected {AER_MAGIC!r}")
    if len(head) != AER_HEADER_SIZE:
        raise AerLengthError("truncated AER header")
    _, width, height, count = _AER_HEADER.unpack(head)
    if width == 0 or height == 0:
        raise AerFormatError("zero sensor dimension in header")
    payload = _read_exact(source, count * AER_RECORD_SIZE, f"payload of {count} events")
    if source.read(1):
        raise AerLengthError(f"trailing bytes after {count} events")
    events = np.frombuffer(payload, dtype=EVENT_DTYPE).copy()
    stream = EventStream(width, height, events)
    problems = validate(stream)
    if problems:
        raise CorruptStreamError(problems)
    return stream


def write_frames(frames: np.ndarray, sink: BinaryIO) -> int:
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise ValueError(f"frames must be (count, height, width), got shape {frames.shape}")
    count, height, width = frames.shape
    header = _FRM_HEADER.pack(FRM_MAGIC, count, height, width)
    payload = np.ascontiguousarray(frames, dtype="<f4").tobytes()
    return _write_all(sink, (header, payload))


def read_frames(source: BinaryIO) -> np.ndarray:
    head = source.read(FRM_HEADER_SIZE)
    if len(head) < 4 or head[:4] != FRM_MAGIC:
        raise AerFormatError(f"bad magic {head[:4]!r}, expected {FRM_MAGIC!r}")
    if len(head) != FRM_HEADER_SIZE:
        raise AerLengthError("truncated FRM header")
    _, count, height, width = _FRM_HEADER.unpack(head)
    n = count * height * width
    payload = _read_exact(source, 4 * n, f"payload of {n} floats")
    if source.read(1):
        raise AerLengthError("trailing bytes after frame payload")
    return np.frombuffer(payload, dtype="<f4").reshape(count, height, width).astype(np.float32)


def export_csv(stream: EventStream, sink: TextIO) -> int:
    """Write ``t_us,x,y,neuron,polarity`` rows; returns the number of data rows."""
    problems = validate(stream)
    if problems:
        raise CorruptStreamError(problems)
    ev = stream.events
    writer = csv.writer(sink, lineterminator="\n")
    try:
        writer.writerow(["t_us", "x", "y", "neuron", "polarity"])
        writer.writerows(
            zip(
                ev["t_us"].tolist(),
                ev["x"].tolist(),
                ev["y"].tolist(),
                stream.neuron_index().tolist(),
                ev["polarity"].tolist(),
            )
        )
    except OSError as exc:
        raise SinkWriteError(f"CSV sink failed: {exc}", 0) from exc
    return len(ev)
