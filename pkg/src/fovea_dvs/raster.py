"""Raster plots of event streams: CSV table and SVG scatter."""
from __future__ import annotations

from typing import BinaryIO, TextIO

import matplotlib
from matplotlib.figure import Figure

from .aer_io import export_csv
from .events import EventStream

ON_COLOR = "blue"
OFF_COLOR = "red"


def write_raster_csv(stream: EventStream, sink: TextIO) -> int:
    return export_csv(stream, sink)


def write_raster_svg(stream: EventStream, sink: BinaryIO | TextIO, title: str = "") -> int:
    """Time (ms) against flat neuron index, ON in blue and OFF in red.

    One marker per event, grouped under the SVG ids ``on-events`` and
    ``off-events``. Output is byte-stable for equal input. Returns the number
    of markers drawn.
    """
    neuron = stream.neuron_index()
    t_ms = stream.t_us.astype(float) / 1000.0
    on = stream.polarity > 0

    fig = Figure(figsize=(8, 5))
    ax = fig.add_subplot()
    for mask, color, label in ((on, ON_COLOR, "on"), (~on, OFF_COLOR, "off")):
        ax.plot(t_ms[mask], neuron[mask], linestyle="none", marker="s", markersize=1,
                markeredgewidth=0, color=color, gid=f"{label}-events")
    ax.set_ylim(0, stream.width * stream.height)
    if len(stream):
        span = float(t_ms.max()) or 1.0
        ax.set_xlim(-0.02 * span, 1.02 * span)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("neuron index")
    if title:
        ax.set_title(title)
    with matplotlib.rc_context({"svg.hashsalt": "raster", "svg.fonttype": "none"}):
        fig.savefig(sink, format="svg", metadata={"Date": None})
    return len(stream)
