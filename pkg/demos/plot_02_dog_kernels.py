"""
Ganglion-cell DoG kernels and edge handling
===========================================

Each kernel is a centre Gaussian minus a 1.6x wider surround, both normalized
to unit mass on the kernel support, so every kernel sums to zero.
"""

# %%
import matplotlib.pyplot as plt
import numpy as np

from fovea_dvs.dog_filters import CELL_TYPES, filter_frame, make_dog_kernel, preset

fig, axes = plt.subplots(1, 4, figsize=(12, 3))
for ax, cell in zip(axes, CELL_TYPES):
    spec = preset(cell)
    k = make_dog_kernel(spec).weights
    lim = np.abs(k).max()
    ax.imshow(k, cmap="bwr", vmin=-lim, vmax=lim)
    ax.set_title(f"{cell}\n{spec.mat_dim}x{spec.mat_dim}, sigma {spec.cent_dev}")
    ax.axis("off")
    print(f"{cell:12s} sum {k.sum():+.1e}  centre {k[spec.mat_dim // 2, spec.mat_dim // 2]:+.4f}")

# %%
# A constant image exposes the edge mode. Wrapping taps around the raster
# leaves nothing; zero padding leaves a frame of artifacts whose width tracks
# the kernel radius.
const = np.ones((128, 128))
kernel = make_dog_kernel(preset("off_parasol"))
zero = filter_frame(const, kernel, "zero_pad")
circ = filter_frame(const, kernel, "circular")
print("circular max |out|:", np.abs(circ).max())
print("zero_pad max |out|:", np.abs(zero).max())

fig, axes = plt.subplots(1, 2, figsize=(7, 3))
for ax, img, name in zip(axes, (zero, circ), ("zero_pad", "circular")):
    ax.imshow(img, cmap="bwr", vmin=-np.abs(zero).max(), vmax=np.abs(zero).max())
    ax.set_title(name)
    ax.axis("off")

# %%
# The 243 px on-parasol kernel is wider than the raster. In circular mode it
# is folded onto the 128x128 torus before filtering.
on_par = make_dog_kernel(preset("on_parasol"))
x = np.random.default_rng(0).standard_normal((128, 128))
y = filter_frame(x, on_par, "circular")
shifted = filter_frame(np.roll(x, 40, axis=1), on_par, "circular")
print("shift equivariance error:", np.abs(shifted - np.roll(y, 40, axis=1)).max())
plt.show()
