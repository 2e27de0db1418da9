"""Event data model for DVS polarity spikes.

Streams are stored as packed numpy structured arrays whose memory layout is
exactly the on-disk AER record (``t_us`` u64, ``x`` u16, ``y`` u16,
``polarity`` i8, little-endian), so serialization is a single ``tobytes``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

EVENT_DTYPE = np.dtype(
    [("t_us", "<u8"), ("x", "<u2"), ("y", "<u2"), ("polarity", "i1")]
)


class DvsEvent(NamedTuple):
    t_us: int
    x: int
    y: int
    polarity: int


def _as_event_array(events) -> np.ndarray:
    if isinstance(events, np.ndarray) and events.dtype == EVENT_DTYPE:
        return events
    if isinstance(events, np.ndarray) and events.dtype.names is not None:
        out = np.empty(len(events), dtype=EVENT_DTYPE)
        for name in EVENT_DTYPE.names:
            out[name] = events[name]
        return out
    return np.array([tuple(int(v) for v in e) for e in events], dtype=EVENT_DTYPE)


@dataclass(eq=False)
class EventStream:
    """A sequence of polarity events on a ``width`` x ``height`` sensor.

    ``events`` accepts a structured array with ``EVENT_DTYPE`` fields or any
    iterable of ``(t_us, x, y, polarity)`` tuples.
    """

    width: int = 128
    height: int = 128
    events: np.ndarray = field(default_factory=lambda: np.empty(0, EVENT_DTYPE))

    def __post_init__(self):
        self.events = _as_event_array(self.events)

    @classmethod
    def from_arrays(cls, t_us, x, y, polarity, width=128, height=128) -> "EventStream":
        t_us = np.asarray(t_us)
        ev = np.empty(t_us.shape[0], dtype=EVENT_DTYPE)
        ev["t_us"] = t_us
        ev["x"] = x
        ev["y"] = y
        ev["polarity"] = polarity
        return cls(width, height, ev)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[DvsEvent]:
        for t, x, y, p in self.events.tolist():
            yield DvsEvent(t, x, y, p)

    def __getitem__(self, idx: int) -> DvsEvent:
        return DvsEvent(*self.events[idx].tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.events, other.events)
        )

    @property
    def t_us(self) -> np.ndarray:
        return self.events["t_us"]

    @property
    def x(self) -> np.ndarray:
        return self.events["x"]

    @property
    def y(self) -> np.ndarray:
        return self.events["y"]

    @property
    def polarity(self) -> np.ndarray:
        return self.events["polarity"]

    def neuron_index(self) -> np.ndarray:
        """Flat pixel index ``y * width + x`` used as the raster-plot row."""
        return self.y.astype(np.int64) * self.width + self.x.astype(np.int64)


def validate(stream: EventStream) -> list[str]:
    """Return a description of every violation in ``stream``; empty means valid."""
    ev = stream.events
    problems: list[tuple[int, str]] = []
    for i in np.flatnonzero(ev["x"] >= stream.width):
        problems.append((int(i), f"event {i}: x={int(ev['x'][i])} out of range [0, {stream.width})"))
    for i in np.flatnonzero(ev["y"] >= stream.height):
        problems.append((int(i), f"event {i}: y={int(ev['y'][i])} out of range [0, {stream.height})"))
    for i in np.flatnonzero((ev["polarity"] != 1) & (ev["polarity"] != -1)):
        problems.append((int(i), f"event {i}: polarity={int(ev['polarity'][i])} is not +1/-1"))
    if len(ev) > 1:
        t = ev["t_us"]
        for i in np.flatnonzero(t[1:] < t[:-1]) + 1:
            problems.append(
                (int(i), f"event {i}: timestamp {int(t[i])} precedes previous {int(t[i - 1])}")
            )
    problems.sort(key=lambda item: item[0])
    return [msg for _, msg in problems]


def sort_events(stream: EventStream) -> EventStream:
    """Stable sort by timestamp; equal timestamps keep their relative order."""
    order = np.argsort(stream.events["t_us"], kind="stable")
    return EventStream(stream.width, stream.height, stream.events[order])


def polarity_counts(stream: EventStream) -> tuple[int, int]:
    p = stream.events["polarity"]
    on = int(np.count_nonzero(p > 0))
    return on, len(p) - on
