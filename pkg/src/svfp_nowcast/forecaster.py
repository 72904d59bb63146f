"""Autoregressive rollout and ensembles for the SVFP model.

The conditioning frames are run through the model with posterior latents
(their reconstructions come out as a by-product). Each forecast step then
draws a latent from the learned prior, predicts the next frame from the
most recent one, and feeds the prediction back into both the predictor and
the prior head. Predictions are fed back as continuous values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import DomainError, ShapeError
from .model import RecurrentState, SVFPModel

DEFAULT_MEMBERS = 10


@dataclass
class Forecast:
    members: np.ndarray  # (K, n_p, H, W)
    mean: np.ndarray  # (n_p, H, W)
    inputs: np.ndarray  # (n_i, H, W)
    seeds: list[int]
    reconstructions: np.ndarray | None = None  # (K, n_i, H, W)

    @property
    def spread(self) -> np.ndarray:
        """Per-cell ensemble standard deviation, ``(n_p, H, W)``.

        Exactly zero where all members agree; a plain float32 std of identical
        values can round to a tiny positive number.
        """
        return np.where(np.ptp(self.members, axis=0) == 0, 0.0, self.members.std(axis=0, dtype=np.float64))


def _as_batch(model: SVFPModel, inputs) -> torch.Tensor:
    x = torch.as_tensor(np.asarray(inputs), dtype=next(model.parameters()).dtype)
    if x.dim() == 3:
        x = x.unsqueeze(0)
    if x.dim() != 4:
        raise ShapeError(f"inputs must be (n_i, H, W) or (B, n_i, H, W), got {tuple(x.shape)}")
    return x


@torch.no_grad()
def rollout_batch(model: SVFPModel, inputs: torch.Tensor, n_predict: int, generators: list[torch.Generator],
                  deterministic: bool = False) -> tuple[torch.Tensor, torch.Tensor]:
    """Roll out ``(B, n_i, H, W)`` inputs, drawing row ``b``'s noise from ``generators[b]``.

    Returns ``(reconstructions (B, n_i, H, W), forecast (B, n_predict, H, W))``.
    """
    if n_predict < 1:
        raise DomainError("n_predict must be >= 1")
    b, n_i = inputs.shape[:2]
    if len(generators) != b:
        raise ShapeError("need one generator per batch row")
    d = model.config.latent_dim

    def draw():
        return torch.stack([torch.randn(d, generator=g, dtype=torch.float64) for g in generators]).to(inputs.dtype)

    state = RecurrentState()
    prev = inputs.new_zeros(b, *inputs.shape[2:])
    recon = []
    for i in range(n_i):
        pred, _, _, state = model.step(prev, state, draw(), target=inputs[:, i], use_mean=deterministic)
        recon.append(pred)
        prev = inputs[:, i]
    out = []
    for _ in range(n_predict):
        prev, _, _, state = model.step(prev, state, draw(), use_mean=deterministic)
        out.append(prev)
    return torch.stack(recon, 1), torch.stack(out, 1)


def rollout(model: SVFPModel, inputs, n_predict: int, seed: int = 0, deterministic: bool = False) -> np.ndarray:
    """Single stochastic forecast of ``n_predict`` frames from ``(n_i, H, W)`` inputs."""
    x = _as_batch(model, inputs)
    if x.shape[0] != 1:
        raise ShapeError("rollout takes a single input stack; use ensemble_forecast for batches")
    g = torch.Generator().manual_seed(seed)
    _, out = rollout_batch(model, x, n_predict, [g], deterministic)
    return out[0].cpu().numpy()


def ensemble_forecast(model: SVFPModel, inputs, n_predict: int, members: int = DEFAULT_MEMBERS,
                      base_seed: int = 0, deterministic: bool = False) -> Forecast:
    """``members`` independent rollouts with seeds ``base_seed + k`` and their mean."""
    if members < 1:
        raise DomainError("members must be >= 1")
    x = _as_batch(model, inputs)
    if x.shape[0] != 1:
        raise ShapeError("ensemble_forecast takes a single input stack")
    seeds = [base_seed + k for k in range(members)]
    gens = [torch.Generator().manual_seed(s) for s in seeds]
    recon, out = rollout_batch(model, x.expand(members, -1, -1, -1), n_predict, gens, deterministic)
    m = out.cpu().numpy()
    return Forecast(m, m.mean(axis=0), x[0].cpu().numpy(), seeds, recon.cpu().numpy())
