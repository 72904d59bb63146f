import numpy as np
import pytest
import torch
from conftest import random_windows, tiny_baseline_config
from helpers import finite_difference_errors, jitter_biases

from svfp_nowcast.baseline import BaselineConfig, ConvLSTMBaseline, baseline_rollout
from svfp_nowcast.errors import DomainError, ShapeError
from svfp_nowcast.experiment import ensemble_spread
from svfp_nowcast.layers import ConvLSTMCell
from svfp_nowcast.trainer import sequence_loss


def test_full_config_architecture():
    m = ConvLSTMBaseline(BaselineConfig(), seed=0)
    cells = m.stack.cells
    assert len(cells) == 2
    assert all(isinstance(c, ConvLSTMCell) and c.hidden_channels == 64 and c.kernel_size == 3 for c in cells)
    assert cells[0].in_channels == 1
    assert m.head.kernel_size == (1, 1) and m.head.out_channels == 1


def test_full_resolution_output():
    m = ConvLSTMBaseline(BaselineConfig(frame_height=40, frame_width=30), seed=0)
    out = baseline_rollout(m, torch.rand(2, 5, 40, 30), 3)
    assert out.shape == (2, 3, 40, 30)
    assert out.min() >= 0 and out.max() <= 1


def test_rollout_is_deterministic(tiny_baseline):
    x = torch.rand(5, 8, 8)
    a = baseline_rollout(tiny_baseline, x, 6)
    b = baseline_rollout(tiny_baseline, x, 6)
    assert torch.equal(a, b)
    # the first forecast frame only depends on the inputs
    assert torch.equal(baseline_rollout(tiny_baseline, x, 1)[0], a[0])


def test_teacher_forced_predicts_frames_after_the_first(tiny_baseline):
    frames = torch.rand(3, 4, 8, 8)
    preds = tiny_baseline.teacher_forced(frames)
    assert preds.shape == (3, 3, 8, 8)
    manual, state = tiny_baseline.predict_next(frames[:, 0])
    assert torch.allclose(preds[:, 0], manual)


def test_errors(tiny_baseline):
    with pytest.raises(ShapeError):
        tiny_baseline.predict_next(torch.zeros(1, 8, 9))
    with pytest.raises(DomainError):
        baseline_rollout(tiny_baseline, torch.zeros(5, 8, 8), 0)
    with pytest.raises(ShapeError):
        BaselineConfig(filters=0)


def test_baseline_loss_gradient_matches_finite_differences():
    model = ConvLSTMBaseline(tiny_baseline_config(8, 8), seed=0).double()
    jitter_biases(model)
    frames = torch.rand(2, 4, 8, 8, dtype=torch.float64, generator=torch.Generator().manual_seed(3))
    errors = finite_difference_errors(model, lambda: sequence_loss(model, frames).total, 100)
    assert errors.max() <= 1e-4, errors.max()
    assert np.all(np.isfinite(errors))


def test_ensemble_spread_separates_stochastic_from_deterministic(tiny_svfp, rng):
    base = ConvLSTMBaseline(tiny_baseline_config(16, 16), seed=0)
    test = random_windows(rng, 2, 8, 16, 16)
    assert ensemble_spread(base, test, 3, 5, members=4, base_seed=0) == 0.0
    assert ensemble_spread(tiny_svfp, test, 3, 5, members=4, base_seed=0) > 0.5
