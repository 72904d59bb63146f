"""Structural similarity with a Gaussian window, valid windows only."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DomainError, ShapeError

WIN_SIZE = 11
WIN_SIGMA = 1.5
K1, K2 = 0.01, 0.03


def gaussian_window(size: int = WIN_SIZE, sigma: float = WIN_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = len(g)
    x = sliding_window_view(x, n, axis=-1) @ g
    return np.swapaxes(sliding_window_view(np.swapaxes(x, -1, -2), n, axis=-1) @ g, -1, -2)


def ssim_map(a, b, data_range: float = 1.0, win_size: int = WIN_SIZE, sigma: float = WIN_SIGMA) -> np.ndarray:
    """Local SSIM at every fully-contained window position of the last two axes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"frames differ in shape: {a.shape} vs {b.shape}")
    if a.ndim < 2 or min(a.shape[-2:]) < win_size:
        raise DomainError(f"frames must be at least {win_size}x{win_size}")
    g = gaussian_window(win_size, sigma)
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a**2
    var_b = _filter_valid(b * b, g) - mu_b**2
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range: float = 1.0, win_size: int = WIN_SIZE, sigma: float = WIN_SIGMA):
    """Mean SSIM over the last two axes; a float for 2-D input, an array for stacks."""
    s = ssim_map(a, b, data_range, win_size, sigma).mean(axis=(-2, -1))
    return float(s) if np.ndim(s) == 0 else s
