"""Emulated DVS recordings, foveal-pit DoG filtering and a spiking CNN classifier."""

from .events import DvsEvent, EventStream
from .stimulus import BarStimulus, DvsEmulatorConfig, generate_recording
from .dog_filters import DogKernelSpec, Kernel, filter_frame, filter_stream, make_dog_kernel, preset
from .framing import Dataset, accumulate, build_dataset
from .lif import LifParams
from .scnn import ScnnParams, TrainConfig, evaluate, spiking_infer, train

__all__ = [
    "BarStimulus",
    "Dataset",
    "DogKernelSpec",
    "DvsEmulatorConfig",
    "DvsEvent",
    "EventStream",
    "Kernel",
    "LifParams",
    "ScnnParams",
    "TrainConfig",
    "accumulate",
    "build_dataset",
    "evaluate",
    "filter_frame",
    "filter_stream",
    "generate_recording",
    "make_dog_kernel",
    "preset",
    "spiking_infer",
    "train",
]
