"""Synthetic advecting rain-cell sequences.

Stands in for composited radar rain-rate maps. Each cell is an isotropic
Gaussian blob that drifts with its own constant velocity plus a small random
walk, and whose strength follows a multiplicative log-normal random walk.

Pixels hold the exact integral of the blob over the pixel area, so the
domain total equals the in-domain mass of the cells. Mass that leaves the
domain is not brought back when a cell drifts back inwards.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from ..errors import ConfigurationError
from .samples import Sequence


@dataclass(frozen=True)
class SyntheticConfig:
    height: int = 800
    width: int = 550
    n_cells: int = 8
    amplitude_range: tuple[float, float] = (5.0, 60.0)  # peak rain rate, mm/h
    radius_range: tuple[float, float] = (10.0, 40.0)  # Gaussian sigma, pixels
    speed_range: tuple[float, float] = (1.0, 4.0)  # pixels per step
    heading_deg: float | None = None  # common drift heading; None draws one per sequence
    heading_spread_deg: float = 30.0
    jitter: float = 0.05  # random-walk step std, pixels
    growth_sigma: float = 0.08  # log-normal growth/decay per step
    length: int = 43
    timestep_min: float = 5.0
    resolution_km: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.length < 1:
            raise ConfigurationError("grid size and length must be positive")
        if self.n_cells < 0:
            raise ConfigurationError("n_cells must be >= 0")
        for name in ("amplitude_range", "radius_range", "speed_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ConfigurationError(f"{name} must satisfy 0 <= low <= high")
        if self.radius_range[0] <= 0:
            raise ConfigurationError("cell radius must be positive")
        if self.amplitude_range[0] <= 0:
            raise ConfigurationError("cell amplitude must be positive")
        if self.jitter < 0 or self.growth_sigma < 0 or self.heading_spread_deg < 0:
            raise ConfigurationError("noise scales must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def _pixel_weights(center: np.ndarray, sigma: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell fraction of a 1-D Gaussian falling in each pixel, and in the domain."""
    edges = np.arange(n + 1)[None, :]
    cdf = ndtr((edges - center[:, None]) / sigma[:, None])
    return np.diff(cdf, axis=1), cdf[:, -1] - cdf[:, 0]


def generate_synthetic_sequence(config: SyntheticConfig) -> Sequence:
    """Render ``config.length`` rate-encoded frames; deterministic in ``config.seed``."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    frames = np.zeros((cfg.length, cfg.height, cfg.width))
    k = cfg.n_cells
    if k == 0:
        return Sequence(frames, cfg.timestep_min, cfg.resolution_km, "rate")

    # (row, col) positions; pixel j spans [j, j + 1)
    pos = np.column_stack([rng.uniform(0, cfg.height, k), rng.uniform(0, cfg.width, k)])
    lo, hi = cfg.amplitude_range
    amp = np.exp(rng.uniform(np.log(lo), np.log(hi), k))
    sigma = rng.uniform(*cfg.radius_range, k)
    heading = np.deg2rad(cfg.heading_deg if cfg.heading_deg is not None else rng.uniform(0, 360))
    angle = heading + np.deg2rad(rng.uniform(-cfg.heading_spread_deg, cfg.heading_spread_deg, k))
    speed = rng.uniform(*cfg.speed_range, k)
    # heading 0 moves along +column
    vel = np.column_stack([speed * np.sin(angle), speed * np.cos(angle)])

    mass = amp * 2.0 * np.pi * sigma**2
    inside_mass = None
    for t in range(cfg.length):
        wr, fr = _pixel_weights(pos[:, 0], sigma, cfg.height)
        wc, fc = _pixel_weights(pos[:, 1], sigma, cfg.width)
        frac = fr * fc
        visible = mass * frac
        if inside_mass is not None:
            visible = np.minimum(visible, inside_mass * growth)
        inside_mass = visible
        scale = np.divide(visible, frac, out=np.zeros_like(visible), where=frac > 0)
        frames[t] = np.einsum("k,ki,kj->ij", scale, wr, wc)

        pos = pos + vel + cfg.jitter * rng.standard_normal((k, 2))
        growth = np.exp(cfg.growth_sigma * rng.standard_normal(k))
        mass = mass * growth

    np.clip(frames, 0.0, None, out=frames)
    return Sequence(frames, cfg.timestep_min, cfg.resolution_km, "rate")
