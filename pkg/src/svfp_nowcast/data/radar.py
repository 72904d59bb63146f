"""Radar frame primitives: Z-R conversion, rain-rate classes, rescaling.

Frames are plain 2-D numpy arrays wrapped in :class:`RainFrame`, which
records how the values are encoded (rain rate in mm/h, class index, or
normalized class value in [0, 1]).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DataError, DomainError

#: Marshall-Palmer constants for Z = A R^b.
MP_A = 200.0
MP_B = 1.6
#: Reflectivity assigned to zero rain (no-echo sentinel).
DBZ_FLOOR = -32.0

N_CLASSES = 14
ENCODINGS = ("rate", "class", "normalized")


@dataclass(frozen=True)
class ClassTable:
    """Rain-rate class edges and the rate used to represent each class.

    ``boundaries`` holds the 13 lower edges of classes 1..13 (left-closed);
    anything below ``boundaries[0]`` is class 0.
    """

    boundaries: tuple[float, ...] = (0.1, 0.3, 0.6, 1.0, 2.0, 4.0, 6.0, 10.0, 15.0, 25.0, 40.0, 60.0, 100.0)
    representatives: tuple[float, ...] | None = None

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.shape != (N_CLASSES - 1,):
            raise DomainError(f"need {N_CLASSES - 1} class boundaries, got {b.size}")
        if b[0] <= 0 or np.any(np.diff(b) <= 0):
            raise DomainError("class boundaries must be positive and strictly increasing")
        if self.representatives is None:
            reps = [0.0] + [float(np.sqrt(lo * hi)) for lo, hi in zip(b[:-1], b[1:])] + [150.0]
            object.__setattr__(self, "representatives", tuple(reps))
        r = np.asarray(self.representatives, dtype=float)
        if r.shape != (N_CLASSES,):
            raise DomainError(f"need {N_CLASSES} representatives, got {r.size}")
        lower = np.concatenate([[0.0], b])
        upper = np.concatenate([b, [np.inf]])
        if np.any(r < lower) or np.any(r >= upper):
            raise DomainError("each representative must lie inside its class interval")

    def to_dict(self) -> dict:
        return {"boundaries": list(self.boundaries), "representatives": list(self.representatives)}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassTable":
        return cls(tuple(d["boundaries"]), tuple(d["representatives"]))


DEFAULT_CLASS_TABLE = ClassTable()


@dataclass
class RainFrame:
    """A single radar frame.

    Attributes
    ----------
    grid : ndarray
        2-D array of rain rates, class indices or normalized values.
    timestamp : float
        Minutes since the start of the sequence.
    resolution_km : float
        Edge length of one pixel.
    encoding : str
        One of ``"rate"``, ``"class"``, ``"normalized"``.
    """

    grid: np.ndarray
    timestamp: float = 0.0
    resolution_km: float = 1.0
    encoding: str = "rate"

    def __post_init__(self):
        self.grid = np.asarray(self.grid)
        if self.grid.ndim != 2 or min(self.grid.shape) < 1:
            raise DataError(f"frame grid must be a non-empty 2-D array, got shape {self.grid.shape}")
        if self.encoding not in ENCODINGS:
            raise DataError(f"unknown encoding {self.encoding!r}")
        g = self.grid
        if self.encoding == "rate" and np.any(g < 0):
            raise DataError("rain rates must be non-negative")
        if self.encoding == "class" and (np.any(g < 0) or np.any(g > N_CLASSES - 1)):
            raise DataError(f"class indices must lie in 0..{N_CLASSES - 1}")
        if self.encoding == "normalized" and (np.any(g < 0) or np.any(g > 1)):
            raise DataError("normalized values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.grid.shape[0]

    @property
    def width(self) -> int:
        return self.grid.shape[1]

    def _with(self, grid, encoding, **kw) -> "RainFrame":
        return replace(self, grid=grid, encoding=encoding, **kw)


def _require(frame: RainFrame, encoding: str) -> None:
    if frame.encoding != encoding:
        raise DataError(f"expected a {encoding!r} frame, got {frame.encoding!r}")


def rain_rate_to_reflectivity(rate, floor: float = DBZ_FLOOR):
    """Convert rain rate (mm/h) to reflectivity (dBZ) via Z = 200 R^1.6.

    Zero rain maps to ``floor``.
    """
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("rain rate must be non-negative")
    with np.errstate(divide="ignore"):
        dbz = 10.0 * np.log10(MP_A) + 10.0 * MP_B * np.log10(r)
    dbz = np.where(r > 0, dbz, floor)
    return dbz if dbz.ndim else float(dbz)


def reflectivity_to_rain_rate(dbz, floor: float = DBZ_FLOOR):
    """Inverse Z-R relation; reflectivities at or below ``floor`` give 0 mm/h."""
    z = np.asarray(dbz, dtype=float)
    rate = (10.0 ** (z / 10.0) / MP_A) ** (1.0 / MP_B)
    rate = np.where(z > floor, rate, 0.0)
    return rate if rate.ndim else float(rate)


def rate_to_class(rate: np.ndarray, table: ClassTable = DEFAULT_CLASS_TABLE) -> np.ndarray:
    return np.searchsorted(np.asarray(table.boundaries), rate, side="right").astype(np.uint8)


def class_to_rate(classes: np.ndarray, table: ClassTable = DEFAULT_CLASS_TABLE) -> np.ndarray:
    c = np.asarray(classes)
    if np.any(c < 0) or np.any(c > N_CLASSES - 1):
        raise DataError(f"class index outside 0..{N_CLASSES - 1}")
    return np.asarray(table.representatives)[c.astype(np.intp)]


def quantize(frame: RainFrame, table: ClassTable = DEFAULT_CLASS_TABLE) -> RainFrame:
    _require(frame, "rate")
    return frame._with(rate_to_class(frame.grid, table), "class")


def dequantize(frame: RainFrame, table: ClassTable = DEFAULT_CLASS_TABLE) -> RainFrame:
    _require(frame, "class")
    return frame._with(class_to_rate(frame.grid, table), "rate")


def normalize(frame: RainFrame) -> RainFrame:
    _require(frame, "class")
    return frame._with(frame.grid.astype(np.float64) / (N_CLASSES - 1), "normalized")


def denormalize(frame: RainFrame) -> RainFrame:
    _require(frame, "normalized")
    return frame._with(normalized_to_class(frame.grid), "class")


def normalized_to_class(values: np.ndarray) -> np.ndarray:
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.rint(v * (N_CLASSES - 1)).astype(np.uint8)


def block_mean(grid: np.ndarray, factor: int) -> np.ndarray:
    """Mean over ``factor x factor`` blocks of the last two axes.

    Trailing partial blocks are averaged over the cells they actually contain.
    """
    if factor < 1:
        raise DomainError("downsampling factor must be >= 1")
    h, w = grid.shape[-2:]
    if factor > h or factor > w:
        raise DomainError(f"factor {factor} exceeds frame size {h}x{w}")
    if factor == 1:
        return grid.copy()
    hb, wb = -(-h // factor), -(-w // factor)
    ph, pw = hb * factor - h, wb * factor - w
    pad = [(0, 0)] * (grid.ndim - 2) + [(0, ph), (0, pw)]
    sums = np.pad(grid.astype(np.float64), pad).reshape(*grid.shape[:-2], hb, factor, wb, factor).sum(axis=(-3, -1))
    counts = np.pad(np.ones((h, w)), [(0, ph), (0, pw)]).reshape(hb, factor, wb, factor).sum(axis=(1, 3))
    return sums / counts


def downsample(frame: RainFrame, factor: int) -> RainFrame:
    _require(frame, "rate")
    return frame._with(block_mean(frame.grid, factor), "rate", resolution_km=frame.resolution_km * factor)
