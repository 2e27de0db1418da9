"""
Training in rate mode, inferring with spikes
============================================

The network trains on the smooth soft-LIF rate curve, then runs the same
weights as spiking LIF neurons for 60 steps of 1 ms. The class is the output
unit with the highest integrated voltage at the last step.

This demo uses the reduced 32x32 geometry so it finishes in about a minute.
"""

# %%
import matplotlib.pyplot as plt
import numpy as np

from fovea_dvs import scnn
from fovea_dvs.dog_filters import filter_stream, preset
from fovea_dvs.framing import build_dataset, downsample
from fovea_dvs.lif import LifParams, lif_rate, soft_lif_rate
from fovea_dvs.stimulus import generate_recording

# %%
# Soft-LIF against the hard LIF rate for a few smoothing widths.
j = np.linspace(0, 4, 400)
p = LifParams(amplitude=1.0)
plt.plot(j, lif_rate(j, p), "k", label="hard")
for g in (1.0, 0.1, 0.02):
    plt.plot(j, soft_lif_rate(j, p.with_gamma(g)), label=f"gamma {g}")
plt.xlabel("input current")
plt.ylabel("rate (Hz)")
plt.legend()

# %%
# Off-parasol filtered frames, reduced to 32x32.
recs = [filter_stream(generate_recording(k, num_frames=40)[0], preset("off_parasol"), "circular")
        for k in range(7)]
ds = build_dataset([(s, k) for k, s in enumerate(recs)], 10_000, seed=42, num_frames=40)
x_train, y_train = ds.split("train")
x_test, y_test = ds.split("test")
x_train, x_test = downsample(x_train, 32), downsample(x_test, 32)

result = scnn.train(x_train, y_train, scnn.TrainConfig(epochs=3, seed=0))
print("loss by epoch:", np.round(result.epoch_losses, 3))

# %%
lif = LifParams()
rate_pred = scnn.predict_rate(result.params, result.lif, x_test)
spk = scnn.evaluate(result.params, lif, x_test, y_test)
print(f"rate-mode accuracy {100 * np.mean(rate_pred == y_test):.1f}%")
print(f"spiking accuracy   {spk.accuracy:.1f}%")
print(spk.confusion)

# %%
# Output voltages of one test frame over the 60 steps.
trace = scnn.spiking_infer(result.params, lif, x_test[0])
plt.figure()
plt.plot(trace.voltages)
plt.xlabel("step (ms)")
plt.ylabel("output voltage")
plt.title(f"true {y_test[0]}, predicted {trace.predicted}")
plt.show()
