"""
Anatomy of the SVFP model
=========================

Build the full-size model for 160x110 frames and trace one time step:
encoder, learned prior, latent sample, ConvLSTM predictor and decoder.
"""
import torch

from svfp_nowcast import ConvLSTMBaseline, ModelConfig, SVFPModel
from svfp_nowcast.baseline import BaselineConfig
from svfp_nowcast.model import RecurrentState

model = SVFPModel(ModelConfig(), seed=0).eval()
cfg = model.config
print(f"frames {cfg.frame_height}x{cfg.frame_width} are padded to {cfg.padded_shape}")
print(f"encoder output (C, H, W): {cfg.feature_shape}; latent dimension {cfg.latent_dim}")

for name, module in model.named_children():
    n = sum(p.numel() for p in module.parameters())
    print(f"  {name:10s} {n:>9,d} parameters")
print(f"  {'total':10s} {sum(p.numel() for p in model.parameters()):>9,d}")

# %%
# One forecast step from a single frame. Without a target the latent comes
# from the prior head; with one it would come from the inference head.
frame = torch.rand(1, 160, 110)
with torch.no_grad():
    feats = model.encode(model.pad(frame))
    prior, state = model.gaussian_head_step(frame, "prior", RecurrentState())
    z = model.sample_latent(prior, torch.randn(1, cfg.latent_dim))
    nxt, _ = model.predict_next_frame(frame, z, state)
print(f"\nfeatures {tuple(feats.shape)}, prior mean {tuple(prior.mean.shape)}, next frame {tuple(nxt.shape)}")
print(f"next frame values lie in [{nxt.min():.3f}, {nxt.max():.3f}]")

# %%
# The deterministic baseline keeps full resolution all the way through.
base = ConvLSTMBaseline(BaselineConfig(), seed=0)
print(f"\nbaseline: {len(base.stack.cells)} ConvLSTM layers of {base.stack.cells[0].hidden_channels} filters,"
      f" {sum(p.numel() for p in base.parameters()):,d} parameters")
