"""Frame sequences, training/test samples, and the rain filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, DomainError
from .radar import RainFrame

#: Minimum domain-total rain rate (mm/h) summed over a sample's frames.
RAIN_THRESHOLD = 10_000.0


@dataclass
class Sequence:
    """An ordered stack of frames sharing shape, resolution and encoding.

    ``frames`` has shape ``(T, H, W)``; frame ``t`` is valid at
    ``t * timestep_min`` minutes.
    """

    frames: np.ndarray
    timestep_min: float = 15.0
    resolution_km: float = 5.0
    encoding: str = "rate"

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3:
            raise DataError(f"sequence frames must be (T, H, W), got {self.frames.shape}")

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, t: int) -> RainFrame:
        return RainFrame(self.frames[t], t * self.timestep_min, self.resolution_km, self.encoding)

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(len(self)) * self.timestep_min

    def thin(self, stride: int) -> "Sequence":
        """Keep every ``stride``-th frame (e.g. 3 turns 5-min data into 15-min data)."""
        if stride < 1:
            raise DomainError("temporal stride must be >= 1")
        return Sequence(self.frames[::stride], self.timestep_min * stride, self.resolution_km, self.encoding)


@dataclass
class Sample:
    inputs: np.ndarray
    targets: np.ndarray
    start_time: float = 0.0
    timestep_min: float = 15.0
    encoding: str = "rate"

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs)
        self.targets = np.asarray(self.targets)
        if self.inputs.ndim != 3 or self.targets.ndim != 3:
            raise DataError("sample inputs and targets must be (T, H, W) stacks")
        if len(self.targets) < 1:
            raise DataError("a sample needs at least one target frame")
        if self.inputs.shape[1:] != self.targets.shape[1:]:
            raise DataError("inputs and targets must share the frame shape")

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def frames(self) -> np.ndarray:
        return np.concatenate([self.inputs, self.targets])

    @property
    def timestamps(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_inputs + self.n_targets) * self.timestep_min


def passes_rain_filter(frames, threshold: float = RAIN_THRESHOLD) -> bool:
    """True iff the rain rate summed over all cells of all frames is at least ``threshold``."""
    if isinstance(frames, (Sequence, Sample)):
        frames = frames.frames
    elif isinstance(frames, (list, tuple)):
        frames = [f.grid if isinstance(f, RainFrame) else f for f in frames]
    total = float(np.sum(np.asarray(frames, dtype=np.float64)))
    return total >= threshold


def window_starts(length: int, window: int, stride: int = 1) -> range:
    if stride < 1:
        raise DomainError("window stride must be >= 1")
    if length < window:
        return range(0)
    return range(0, length - window + 1, stride)


def window_dataset(
    sequence: Sequence,
    n_inputs: int,
    n_predict: int,
    stride: int = 1,
    threshold: float | None = RAIN_THRESHOLD,
    rates: Sequence | None = None,
) -> list[Sample]:
    """Cut a sequence into ``(n_inputs, n_predict)`` samples with a sliding window.

    Windows failing the rain filter are dropped; pass ``threshold=None`` to
    keep all of them. The filter always runs on rain rates, so when
    ``sequence`` is class-encoded the matching rate sequence must be given
    as ``rates``.
    """
    window = n_inputs + n_predict
    rate_seq = rates if rates is not None else sequence
    rate_frames = rate_seq.frames
    if threshold is not None and rate_seq.encoding != "rate":
        raise DataError("the rain filter needs a rate-encoded sequence")
    out = []
    for s in window_starts(len(sequence), window, stride):
        if threshold is not None and not passes_rain_filter(rate_frames[s : s + window], threshold):
            continue
        chunk = sequence.frames[s : s + window]
        out.append(
            Sample(
                chunk[:n_inputs],
                chunk[n_inputs:],
                start_time=s * sequence.timestep_min,
                timestep_min=sequence.timestep_min,
                encoding=sequence.encoding,
            )
        )
    return out
