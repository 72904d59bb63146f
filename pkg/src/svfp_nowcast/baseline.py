"""Deterministic two-layer ConvLSTM baseline at full frame resolution."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import DomainError, ShapeError
from .layers import ConvLSTMStack, init_weights


@dataclass(frozen=True)
class BaselineConfig:
    frame_height: int = 160
    frame_width: int = 110
    layers: int = 2
    filters: int = 64
    kernel: int = 3
    n_inputs: int = 5
    n_predict: int = 10

    def __post_init__(self):
        if min(self.frame_height, self.frame_width, self.layers, self.filters, self.kernel) < 1:
            raise ShapeError("baseline sizes must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class ConvLSTMBaseline(nn.Module):
    kind = "convlstm"

    def __init__(self, config: BaselineConfig = BaselineConfig(), seed: int = 0):
        super().__init__()
        self.config = config
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.stack = ConvLSTMStack(1, config.filters, config.layers, config.kernel)
            self.head = nn.Conv2d(config.filters, 1, 1)
            init_weights(self)

    def _check(self, frame: torch.Tensor) -> None:
        if frame.shape[-2:] != (self.config.frame_height, self.config.frame_width):
            raise ShapeError(
                f"frames are {tuple(frame.shape[-2:])}, baseline expects "
                f"{(self.config.frame_height, self.config.frame_width)}"
            )

    def predict_next(self, frame: torch.Tensor, state=None):
        """``(B, H, W)`` frame -> predicted next frame in [0, 1] and advanced state."""
        self._check(frame)
        h, state = self.stack(frame.unsqueeze(1), state)
        return torch.sigmoid(self.head(h))[:, 0], state

    def teacher_forced(self, frames: torch.Tensor) -> torch.Tensor:
        """Predict frames ``1..T-1`` of ``(B, T, H, W)`` from the true frame before each."""
        self._check(frames)
        state, preds = None, []
        for i in range(frames.shape[1] - 1):
            pred, state = self.predict_next(frames[:, i], state)
            preds.append(pred)
        return torch.stack(preds, 1)


@torch.no_grad()
def baseline_rollout(model: ConvLSTMBaseline, inputs: torch.Tensor, n_predict: int) -> torch.Tensor:
    """Warm up on ``(B, n_i, H, W)`` true frames, then feed predictions back.

    Returns ``(B, n_predict, H, W)``.
    """
    if n_predict < 1:
        raise DomainError("n_predict must be >= 1")
    if inputs.dim() == 3:
        return baseline_rollout(model, inputs.unsqueeze(0), n_predict)[0]
    state = None
    for i in range(inputs.shape[1]):
        frame, state = model.predict_next(inputs[:, i], state)
    out = [frame]
    for _ in range(n_predict - 1):
        frame, state = model.predict_next(frame, state)
        out.append(frame)
    return torch.stack(out, 1)
