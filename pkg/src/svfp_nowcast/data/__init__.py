from .radar import (
    DBZ_FLOOR,
    DEFAULT_CLASS_TABLE,
    N_CLASSES,
    ClassTable,
    RainFrame,
    block_mean,
    class_to_rate,
    denormalize,
    dequantize,
    downsample,
    normalize,
    normalized_to_class,
    quantize,
    rain_rate_to_reflectivity,
    rate_to_class,
    reflectivity_to_rain_rate,
)
from .samples import RAIN_THRESHOLD, Sample, Sequence, passes_rain_filter, window_dataset, window_starts
from .store import DataConfig, Dataset, DatasetManifest, build_synthetic_dataset
from .synthetic import SyntheticConfig, generate_synthetic_sequence
