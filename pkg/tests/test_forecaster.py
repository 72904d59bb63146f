import numpy as np
import pytest
import torch
from conftest import tiny_model_config

from svfp_nowcast.errors import DomainError, ShapeError
from svfp_nowcast.forecaster import Forecast, ensemble_forecast, rollout
from svfp_nowcast.model import RecurrentState, SVFPModel, sample_latent


@pytest.fixture(scope="module")
def model():
    return SVFPModel(tiny_model_config(), seed=4).eval()


@pytest.fixture(scope="module")
def inputs():
    return np.random.default_rng(0).random((5, 16, 16)).astype(np.float32)


def test_one_step_matches_manual_unroll(model, inputs):
    # posterior warm-up over the inputs, then one prior draw and predictor step
    g = torch.Generator().manual_seed(9)
    draws = [torch.randn(3, generator=g, dtype=torch.float64).float()[None] for _ in range(6)]
    x = torch.as_tensor(inputs)[None]
    state, prev = RecurrentState(), torch.zeros(1, 16, 16)
    with torch.no_grad():
        for i in range(5):
            _, _, _, state = model.step(prev, state, draws[i], target=x[:, i])
            prev = x[:, i]
        p, state_p = model.gaussian_head_step(prev, "prior", state)
        expected, _ = model.predict_next_frame(prev, sample_latent(p, draws[5]), state_p)
    got = rollout(model, inputs, 1, seed=9)
    np.testing.assert_allclose(got, expected.numpy(), atol=1e-6)


def test_rollout_seed_determinism(model, inputs):
    a = rollout(model, inputs, 4, seed=1)
    np.testing.assert_array_equal(a, rollout(model, inputs, 4, seed=1))
    assert not np.array_equal(a, rollout(model, inputs, 4, seed=2))


def test_longer_rollout_extends_shorter(model, inputs):
    short = rollout(model, inputs, 3, seed=5)
    long = rollout(model, inputs, 8, seed=5)
    np.testing.assert_allclose(long[:3], short, atol=1e-6)


def test_long_horizon_in_range(model, inputs):
    out = rollout(model, inputs, 40, seed=0)
    assert out.shape == (40, 16, 16)
    assert np.all(np.isfinite(out)) and out.min() >= 0 and out.max() <= 1


def test_deterministic_mode_ignores_seed(model, inputs):
    a = rollout(model, inputs, 3, seed=1, deterministic=True)
    np.testing.assert_array_equal(a, rollout(model, inputs, 3, seed=2, deterministic=True))


def test_ensemble_members_match_single_rollouts(model, inputs):
    fc = ensemble_forecast(model, inputs, 3, members=4, base_seed=20)
    assert fc.members.shape == (4, 3, 16, 16) and fc.seeds == [20, 21, 22, 23]
    assert fc.reconstructions.shape == (4, 5, 16, 16)
    for k in range(4):
        np.testing.assert_allclose(fc.members[k], rollout(model, inputs, 3, seed=20 + k), atol=1e-6)
    np.testing.assert_allclose(fc.mean, fc.members.mean(0))
    assert np.any(fc.spread > 0)


def test_single_member_ensemble(model, inputs):
    fc = ensemble_forecast(model, inputs, 2, members=1, base_seed=3)
    np.testing.assert_array_equal(fc.mean, fc.members[0])
    assert not fc.spread.any()


def test_equal_latents_give_zero_spread(model, inputs):
    fc = ensemble_forecast(model, inputs, 3, members=3, deterministic=True)
    assert not fc.spread.any()


def test_spread_is_exactly_zero_for_identical_members():
    # a float32 std of ten copies of 0.7 rounds to 6e-8
    members = np.full((10, 2, 3, 3), 0.7, np.float32)
    members[3, 1, 0, 0] = 0.6
    fc = Forecast(members, members.mean(0), np.zeros((1, 3, 3), np.float32), list(range(10)))
    assert np.count_nonzero(fc.spread) == 1 and fc.spread[1, 0, 0] > 0


def test_rollout_errors(model, inputs):
    with pytest.raises(DomainError):
        rollout(model, inputs, 0)
    with pytest.raises(DomainError):
        ensemble_forecast(model, inputs, 2, members=0)
    with pytest.raises(ShapeError):
        rollout(model, inputs[0], 2)
    with pytest.raises(ShapeError):
        rollout(model, np.zeros((5, 12, 16)), 2)
