"""
Radar units: reflectivity, rain rate and rain classes
=====================================================

Radar composites report reflectivity in dBZ. The models work on rain-rate
classes scaled to [0, 1]. This script walks a few values through each step.
"""
import numpy as np

from svfp_nowcast.data import (
    DEFAULT_CLASS_TABLE,
    RainFrame,
    block_mean,
    dequantize,
    downsample,
    normalize,
    quantize,
    rain_rate_to_reflectivity,
    reflectivity_to_rain_rate,
)

# Marshall-Palmer: Z = 200 R^1.6, in decibels
for rate in (0.0, 0.1, 1.0, 10.0, 100.0):
    dbz = rain_rate_to_reflectivity(rate)
    print(f"{rate:7.1f} mm/h -> {dbz:7.2f} dBZ -> {reflectivity_to_rain_rate(dbz):7.3f} mm/h")

# %%
# Rain rates fall into 14 left-closed classes. Each class is represented by
# the geometric midpoint of its interval when converted back.
print("\nclass  lower edge  representative")
edges = (0.0,) + DEFAULT_CLASS_TABLE.boundaries
for k, (lo, rep) in enumerate(zip(edges, DEFAULT_CLASS_TABLE.representatives)):
    print(f"{k:5d}  {lo:10.1f}  {rep:14.2f}")

frame = RainFrame(np.array([[0.0, 0.05, 0.3], [2.5, 12.0, 180.0]]))
classes = quantize(frame)
print("\nrates\n", frame.grid)
print("classes\n", classes.grid)
print("normalized\n", normalize(classes).grid.round(3))
print("back to rates\n", dequantize(classes).grid.round(2))

# %%
# Downsampling averages rain rate over blocks, so the domain total (times the
# block area) is unchanged.
rng = np.random.default_rng(0)
fine = RainFrame(rng.gamma(0.3, 5.0, size=(8, 8)), resolution_km=1.0)
coarse = downsample(fine, 4)
print(f"\n8x8 @ 1 km -> {coarse.grid.shape} @ {coarse.resolution_km} km;"
      f" totals {fine.grid.sum():.3f} vs {coarse.grid.sum() * 16:.3f}")
print(block_mean(np.array([[0.0, 2.0], [4.0, 6.0]]), 2))
