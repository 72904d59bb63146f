import numpy as np
import pytest
import torch

from svfp_nowcast.baseline import BaselineConfig, ConvLSTMBaseline
from svfp_nowcast.model import ModelConfig, SVFPModel

torch.set_num_threads(1)


def tiny_model_config(h=16, w=16, **kw) -> ModelConfig:
    base = dict(frame_height=h, frame_width=w, encoder_filters=(2, 3, 4, 4), encoder_kernels=(3, 3, 3, 3),
                predictor_layers=2, predictor_filters=4, head_filters=3, lstm_units=4, latent_dim=3)
    base.update(kw)
    return ModelConfig(**base)


def tiny_baseline_config(h=8, w=8, **kw) -> BaselineConfig:
    base = dict(frame_height=h, frame_width=w, layers=2, filters=3, kernel=3)
    base.update(kw)
    return BaselineConfig(**base)


@pytest.fixture
def tiny_svfp():
    return SVFPModel(tiny_model_config(), seed=0)


@pytest.fixture
def tiny_baseline():
    return ConvLSTMBaseline(tiny_baseline_config(), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_windows(rng, n, t, h, w, dtype=np.float32):
    """Normalized class-valued windows."""
    return (rng.integers(0, 14, size=(n, t, h, w)) / 13).astype(dtype)


# -- acceptance reporting ---------------------------------------------------------
ACCEPTANCE_LINES: dict[str, str] = {}


def report(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
