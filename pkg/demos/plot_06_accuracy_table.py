"""
The nine-scenario accuracy table
================================

``pipeline.repro`` emulates the recordings once, then for the unfiltered
input and each of the four cell types under both edge modes it builds a
dataset, trains, writes a checkpoint and scores spiking accuracy. The same
run is available as ``fovea-dvs repro``.

The settings below are a quick reduced run; the defaults (full 128x128
geometry, 100 frames per class) take about half an hour on one core.
"""

# %%
import tempfile
from pathlib import Path

from fovea_dvs import pipeline, scnn

cfg = pipeline.PipelineConfig(
    out=Path(tempfile.mkdtemp()), frames=30, geometry="reduced", train=scnn.TrainConfig(seed=0)
)
pipeline.repro(cfg, log=print)

# %%
print((cfg.out / "report.csv").read_text())
