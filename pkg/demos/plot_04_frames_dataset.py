"""
From events to a labeled frame dataset
======================================

Events are binned into 10 ms windows as ON minus OFF counts, scaled into
[-1, 1] per recording, labeled by class and split 9:1 within each class.
"""

# %%
import matplotlib.pyplot as plt
import numpy as np

from fovea_dvs.framing import build_dataset, downsample
from fovea_dvs.stimulus import generate_recording

recordings = [generate_recording(k, num_frames=30) for k in range(7)]
ds = build_dataset(recordings, frame_period_us=10_000, seed=42, num_frames=30)
print(len(ds), "frames,", int(ds.is_test.sum()), "held out")
print("test frames per class:", np.bincount(ds.labels[ds.is_test]))

# %%
# One frame per class at full size and after the 4x4 block average used by
# the reduced 32x32 network.
fig, axes = plt.subplots(2, 7, figsize=(14, 4))
for k in range(7):
    frame = ds.frames[ds.labels == k][5]
    axes[0, k].imshow(frame, cmap="bwr", vmin=-1, vmax=1)
    axes[1, k].imshow(downsample(frame[None], 32)[0], cmap="bwr", vmin=-1, vmax=1)
    axes[0, k].set_title(f"class {k}")
for ax in axes.flat:
    ax.axis("off")
plt.show()
