"""Negative variational lower bound: l2 reconstruction plus beta-weighted KL.

Reduction: sums over pixels, latent dimensions and time steps; mean over
the batch. ``beta`` only balances the two terms under this convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import ShapeError
from .model import GaussianParams

REDUCTION = "sum_elements_mean_batch"


@dataclass
class LossBreakdown:
    reconstruction: torch.Tensor
    kl: torch.Tensor
    total: torch.Tensor
    beta: float

    def item(self) -> dict[str, float]:
        return {k: float(torch.as_tensor(getattr(self, k)).detach()) for k in ("reconstruction", "kl", "total")}


def _as_tensor(x) -> torch.Tensor:
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(x, dtype=torch.float64)


def reconstruction_loss(pred, target) -> torch.Tensor:
    """Squared error summed over every non-batch element, averaged over the batch.

    Inputs without a batch axis (a single 2-D frame) count as batch size 1.
    """
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {tuple(pred.shape)} and target {tuple(target.shape)} differ")
    sq = (pred - target) ** 2
    if sq.dim() <= 2:
        return sq.sum()
    return sq.flatten(1).sum(1).mean()


def kl_diag_gaussians(q: GaussianParams, p: GaussianParams) -> torch.Tensor:
    """KL(q || p) for diagonal Gaussians given as (mean, log-variance).

    Summed over the last axis and averaged over any leading batch axis.
    """
    mq, lq = _as_tensor(q[0]), _as_tensor(q[1])
    mp, lp = _as_tensor(p[0]), _as_tensor(p[1])
    if not (mq.shape == lq.shape == mp.shape == lp.shape):
        raise ShapeError("Gaussian parameter shapes differ")
    kl = 0.5 * (torch.exp(lq - lp) + (mp - mq) ** 2 * torch.exp(-lp) - 1.0 + lp - lq)
    kl = kl.sum(-1)
    return kl.mean() if kl.dim() else kl


def elbo_loss(pred, target, q, p, beta: float) -> LossBreakdown:
    """Single-step loss; ``q``/``p`` may also be lists of per-step params."""
    recon = reconstruction_loss(pred, target)
    if isinstance(q, (list, tuple)) and not isinstance(q, GaussianParams):
        kl = sum((kl_diag_gaussians(qi, pi) for qi, pi in zip(q, p)), recon.new_zeros(()))
    else:
        kl = kl_diag_gaussians(q, p)
    return LossBreakdown(recon, kl, recon + beta * kl, beta)
