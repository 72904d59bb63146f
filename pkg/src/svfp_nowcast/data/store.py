"""On-disk dataset container.

A dataset is a directory holding ``manifest.json`` and one raw binary file
per sequence. Each binary file is the row-major ``(T, H, W)`` stack of 8-bit
unsigned class indices; its dimensions come from the manifest. The manifest
also records the class table, cadence, resolution, the split tag of each
sequence and the start indices of the windows that passed the rain filter.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import DataError
from .radar import DEFAULT_CLASS_TABLE, N_CLASSES, ClassTable, block_mean, rate_to_class
from .samples import RAIN_THRESHOLD, Sequence, window_dataset
from .synthetic import SyntheticConfig, generate_synthetic_sequence

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


@dataclass
class SequenceEntry:
    file: str
    n_frames: int
    split: str
    windows: list[int]
    window_length: int
    seed: int | None = None


@dataclass
class DatasetManifest:
    height: int
    width: int
    resolution_km: float
    timestep_min: float
    n_inputs: int
    n_predict: int
    threshold: float
    class_table: dict = field(default_factory=DEFAULT_CLASS_TABLE.to_dict)
    sequences: list[SequenceEntry] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        d = dict(d)
        if d.get("format_version") != FORMAT_VERSION:
            raise DataError(f"unsupported dataset format version {d.get('format_version')!r}")
        d["sequences"] = [SequenceEntry(**s) for s in d.get("sequences", [])]
        return cls(**d)


def write_sequence(path: Path, classes: np.ndarray) -> None:
    c = np.asarray(classes)
    if c.ndim != 3:
        raise DataError("expected a (T, H, W) class stack")
    if np.any(c > N_CLASSES - 1):
        raise DataError("class index out of range")
    Path(path).write_bytes(np.ascontiguousarray(c, dtype=np.uint8).tobytes(order="C"))


def read_sequence(path: Path, n_frames: int, height: int, width: int) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size != n_frames * height * width:
        raise DataError(f"{path}: expected {n_frames * height * width} bytes, found {raw.size}")
    return raw.reshape(n_frames, height, width)


def write_manifest(root: Path, manifest: DatasetManifest) -> None:
    with open(Path(root) / MANIFEST, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")


class Dataset:
    """Read access to a dataset directory."""

    def __init__(self, root):
        self.root = Path(root)
        path = self.root / MANIFEST
        if not path.is_file():
            raise DataError(f"no dataset manifest at {path}")
        with open(path) as fh:
            self.manifest = DatasetManifest.from_dict(json.load(fh))
        self.class_table = ClassTable.from_dict(self.manifest.class_table)
        self._cache: dict[str, np.ndarray] = {}

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.manifest.height, self.manifest.width

    def entries(self, split: str | None = None) -> list[SequenceEntry]:
        return [e for e in self.manifest.sequences if split is None or e.split == split]

    def sequence(self, entry: SequenceEntry) -> Sequence:
        m = self.manifest
        if entry.file not in self._cache:
            self._cache[entry.file] = read_sequence(self.root / entry.file, entry.n_frames, m.height, m.width)
        return Sequence(self._cache[entry.file], m.timestep_min, m.resolution_km, "class")

    def windows(self, split: str) -> np.ndarray:
        """All filtered windows of ``split`` as normalized float32, shape ``(N, T, H, W)``."""
        out = []
        for e in self.entries(split):
            frames = self.sequence(e).frames
            out.extend(frames[s : s + e.window_length] for s in e.windows)
        if not out:
            h, w = self.frame_shape
            length = self.entries(split)[0].window_length if self.entries(split) else 0
            return np.zeros((0, length, h, w), np.float32)
        return np.stack(out).astype(np.float32) / (N_CLASSES - 1)


@dataclass(frozen=True)
class DataConfig:
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    n_sequences: int = 120
    thin_stride: int = 3
    downsample: int = 5
    test_fraction: float = 0.2
    n_inputs: int = 5
    n_predict: int = 10
    train_targets: int = 1
    window_stride: int = 1
    threshold: float = RAIN_THRESHOLD


def build_synthetic_dataset(root, config: DataConfig, table: ClassTable = DEFAULT_CLASS_TABLE) -> Dataset:
    """Generate, thin, downsample, quantize, window and store synthetic sequences.

    Sequence ``j`` uses seed ``config.synthetic.seed + j``; the first
    ``1 - test_fraction`` of them are tagged ``train`` and the rest ``test``.
    Training windows hold ``n_inputs + train_targets`` frames, test windows
    ``n_inputs + n_predict``.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    n_test = int(round(config.n_sequences * config.test_fraction))
    n_train = config.n_sequences - n_test
    base = config.synthetic
    res = base.resolution_km * config.downsample
    step = base.timestep_min * config.thin_stride
    h = -(-base.height // config.downsample)
    w = -(-base.width // config.downsample)
    manifest = DatasetManifest(
        height=h, width=w, resolution_km=res, timestep_min=step,
        n_inputs=config.n_inputs, n_predict=config.n_predict,
        threshold=config.threshold, class_table=table.to_dict(),
        extra={"synthetic": base.to_dict(), "n_sequences": config.n_sequences,
               "thin_stride": config.thin_stride, "downsample": config.downsample},
    )
    for j in range(config.n_sequences):
        seed = base.seed + j
        raw = generate_synthetic_sequence(replace(base, seed=seed))
        rates = Sequence(block_mean(raw.thin(config.thin_stride).frames, config.downsample), step, res, "rate")
        classes = Sequence(rate_to_class(rates.frames, table), step, res, "class")
        split = "train" if j < n_train else "test"
        n_out = config.train_targets if split == "train" else config.n_predict
        window = config.n_inputs + n_out
        kept = window_dataset(rates, config.n_inputs, n_out, config.window_stride, config.threshold)
        starts = [int(round(s.start_time / step)) for s in kept]
        name = f"seq_{j:05d}.u8"
        write_sequence(root / name, classes.frames)
        manifest.sequences.append(SequenceEntry(name, len(classes), split, starts, window, seed))
    write_manifest(root, manifest)
    return Dataset(root)
