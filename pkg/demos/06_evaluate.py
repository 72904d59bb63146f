"""
Scoring forecasts with SSIM
===========================

Structural similarity compares local means, variances and covariances in an
11-pixel Gaussian window. Here we score persistence (repeat the last frame)
on synthetic test windows and draw the lead-time curve.
"""
import tempfile
from pathlib import Path

import numpy as np

from svfp_nowcast.data import DataConfig, SyntheticConfig, build_synthetic_dataset
from svfp_nowcast.evaluation import emit_figures, evaluate, persistence, ssim

rng = np.random.default_rng(0)
a = rng.random((32, 32))
print(f"SSIM(a, a) = {ssim(a, a):.4f}")
print(f"SSIM(a, a + noise) = {ssim(a, np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)):.4f}")
print(f"SSIM(zeros, ones) = {ssim(np.zeros((16, 16)), np.ones((16, 16))):.2e}")

# %%
work = Path(tempfile.mkdtemp())
syn = SyntheticConfig(height=64, width=64, n_cells=5, radius_range=(3, 8), speed_range=(0.3, 1.0), seed=500)
ds = build_synthetic_dataset(work / "data", DataConfig(synthetic=syn, n_sequences=10, downsample=2,
                                                       test_fraction=1.0))
test = ds.windows("test")
ev = evaluate(persistence, test, 5, 10, name="persistence", keep_examples=(0,))
for s in ev.scores:
    print(f"lead {s.lead:2d} ({15 * s.lead:3d} min): SSIM {s.mean:.3f} +- {s.ci:.3f}")

ex = ev.examples[0]
rows = {"truth": np.concatenate([ex["inputs"], ex["truth"]]), "persistence": [None] * 5 + list(ex["forecast"])}
paths = emit_figures(ev.scores, [rows], work / "figures", n_inputs=5)
print("figures:", *paths, sep="\n  ")
