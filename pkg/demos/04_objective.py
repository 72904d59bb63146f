"""
The training objective
======================

The loss is a squared reconstruction error plus beta times the KL
divergence between the inference head's Gaussian and the learned prior.
We check the closed-form KL against sampling and show what beta does.
"""
import numpy as np
import torch

from svfp_nowcast.model import GaussianParams
from svfp_nowcast.objective import elbo_loss, kl_diag_gaussians

q = GaussianParams(torch.tensor([[0.5, -1.0, 2.0]], dtype=torch.float64),
                   torch.tensor([[0.0, -0.5, 0.3]], dtype=torch.float64))
p = GaussianParams(torch.zeros(1, 3, dtype=torch.float64), torch.zeros(1, 3, dtype=torch.float64))
exact = float(kl_diag_gaussians(q, p))

rng = np.random.default_rng(0)
mq, lq = q.mean.numpy()[0], q.log_variance.numpy()[0]
z = mq + np.exp(0.5 * lq) * rng.standard_normal((1_000_000, 3))
log_ratio = (-0.5 * ((z - mq) ** 2 / np.exp(lq) + lq) + 0.5 * z**2).sum(1)
print(f"KL closed form {exact:.5f}, Monte Carlo {log_ratio.mean():.5f} +- {log_ratio.std() / 1e3:.5f}")

# %%
# With pixel sums of order 100 and a per-step KL of order 1, beta = 1e-7
# makes the KL almost free: the inference head can pass a lot of
# information about the target to the predictor.
pred = torch.full((1, 32, 32), 0.4, dtype=torch.float64)
target = torch.full((1, 32, 32), 0.5, dtype=torch.float64)
for beta in (0.0, 1e-7, 1e-3, 1.0):
    loss = elbo_loss(pred, target, q, p, beta)
    print(f"beta {beta:7.0e}: reconstruction {float(loss.reconstruction):.3f}"
          f" + beta * KL {beta * float(loss.kl):.3e} = {float(loss.total):.4f}")
