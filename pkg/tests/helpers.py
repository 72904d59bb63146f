"""Central finite-difference check against autograd."""
import numpy as np
import torch

FD_STEP = 1e-4
# gradients smaller than this are compared in absolute terms; below it
# float64 round-off in the loss (~1e-14 relative) dominates the difference
FD_FLOOR = 1e-5


def jitter_biases(model, seed=0, scale=0.1):
    """Move off the all-zero bias init.

    With zero biases and a blank first frame every encoder pre-activation is
    exactly 0, i.e. on the leaky-ReLU kink, where one-sided autograd and a
    central difference legitimately disagree.
    """
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if name.endswith("bias"):
                p.add_(scale * torch.randn(p.shape, generator=g, dtype=p.dtype))


def relative_error(a, n, floor=FD_FLOOR):
    return abs(a - n) / max(abs(a), abs(n), floor)


def finite_difference_errors(model, loss_fn, n_params=100, seed=0, h=FD_STEP):
    """Relative errors between autograd and central differences on ``n_params`` random scalars.

    ``loss_fn()`` must be deterministic. Parameters are drawn uniformly over
    every scalar in the model, without replacement.
    """
    model.zero_grad(set_to_none=True)
    loss_fn().backward()
    params = [p for p in model.parameters() if p.requires_grad]
    sizes = np.array([p.numel() for p in params])
    flat = np.random.default_rng(seed).choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
    bounds = np.cumsum(sizes)
    errors = []
    for f in flat:
        k = int(np.searchsorted(bounds, f, side="right"))
        i = int(f - (bounds[k - 1] if k else 0))
        p = params[k]
        analytic = float(p.grad.view(-1)[i])
        with torch.no_grad():
            orig = float(p.view(-1)[i])
            p.view(-1)[i] = orig + h
            up = float(loss_fn())
            p.view(-1)[i] = orig - h
            down = float(loss_fn())
            p.view(-1)[i] = orig
        errors.append(relative_error(analytic, (up - down) / (2 * h)))
    return np.array(errors)
