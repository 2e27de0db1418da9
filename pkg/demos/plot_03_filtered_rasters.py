"""
Filtered event streams and raster plots
=======================================

``filter_stream`` frames a recording, filters each frame and re-emits one
event per pixel whose response clears 5% of the kernel's peak weight. The
rasters put time on the x axis and the flat pixel index ``y*128 + x`` on the
y axis; ON is blue, OFF red.
"""

# %%
import tempfile
from pathlib import Path

from fovea_dvs.dog_filters import filter_stream, preset
from fovea_dvs.events import polarity_counts
from fovea_dvs.raster import write_raster_csv, write_raster_svg
from fovea_dvs.stimulus import generate_recording

raw, _ = generate_recording(1, num_frames=12)
out = Path(tempfile.mkdtemp())

streams = {"unfiltered": raw}
for cell in ("off_midget", "off_parasol"):
    for mode in ("zero_pad", "circular"):
        streams[f"{cell}_{mode}"] = filter_stream(raw, preset(cell), mode)

for name, s in streams.items():
    on, off = polarity_counts(s)
    with open(out / f"{name}.svg", "wb") as fh:
        write_raster_svg(s, fh, title=name)
    print(f"{name:22s} {len(s):7d} events (ON {on}, OFF {off})")

# %%
# The CSV export carries the same points for plotting elsewhere.
with open(out / "unfiltered.csv", "w", newline="") as fh:
    rows = write_raster_csv(raw, fh)
print(rows, "rows;", (out / "unfiltered.csv").read_text().splitlines()[:3])
print("SVG rasters in", out)
