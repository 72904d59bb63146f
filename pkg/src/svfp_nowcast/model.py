"""Stochastic variational frame predictor with a learned prior.

One time step ``i`` of the model::

    prior:      x_{i-1} -> encoder -> conv -> LSTM -> (mean, log-variance)
    inference:  x_i     -> encoder -> conv -> LSTM -> (mean, log-variance)
    predictor:  [encoder(x_{i-1}), broadcast z_i] -> 2 x ConvLSTM -> decoder -> x_hat_i

The prior and inference LSTMs carry state across steps, so their outputs
depend on every frame seen so far. ``x_0`` is an all-zero frame, which lets
the first real frame be reconstructed from the posterior latent alone.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ShapeError
from .layers import LEAKY_SLOPE, ConvLSTMStack, LSTMCell, init_weights


@dataclass(frozen=True)
class ModelConfig:
    frame_height: int = 160
    frame_width: int = 110
    encoder_filters: tuple[int, ...] = (16, 32, 64, 128)
    encoder_kernels: tuple[int, ...] = (5, 5, 3, 3)
    predictor_layers: int = 2
    predictor_filters: int = 128
    predictor_kernel: int = 3
    head_filters: int = 128
    head_kernel: int = 3
    lstm_units: int = 64
    latent_dim: int = 70
    beta: float = 1e-7
    n_inputs: int = 5
    n_predict: int = 10
    leaky_slope: float = LEAKY_SLOPE
    logvar_clamp: float = 14.0
    share_encoder: bool = True

    def __post_init__(self):
        object.__setattr__(self, "encoder_filters", tuple(self.encoder_filters))
        object.__setattr__(self, "encoder_kernels", tuple(self.encoder_kernels))
        if len(self.encoder_filters) != len(self.encoder_kernels) or not self.encoder_filters:
            raise ShapeError("encoder_filters and encoder_kernels must be non-empty and equally long")
        ints = [self.frame_height, self.frame_width, self.predictor_layers, self.predictor_filters,
                self.predictor_kernel, self.head_filters, self.head_kernel, self.lstm_units,
                self.latent_dim, self.n_inputs, self.n_predict, *self.encoder_filters, *self.encoder_kernels]
        if min(ints) < 1 or self.beta < 0 or self.logvar_clamp <= 0:
            raise ShapeError("model sizes must be positive and beta non-negative")

    @property
    def multiple(self) -> int:
        return 2 ** len(self.encoder_filters)

    @property
    def padded_shape(self) -> tuple[int, int]:
        m = self.multiple
        return -(-self.frame_height // m) * m, -(-self.frame_width // m) * m

    @property
    def feature_shape(self) -> tuple[int, int, int]:
        """(channels, height, width) of the encoder output."""
        hp, wp = self.padded_shape
        return self.encoder_filters[-1], hp // self.multiple, wp // self.multiple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder_filters"] = list(self.encoder_filters)
        d["encoder_kernels"] = list(self.encoder_kernels)
        return d


class GaussianParams(NamedTuple):
    """Diagonal Gaussian over the latent space, batched as ``(B, latent_dim)``."""

    mean: torch.Tensor
    log_variance: torch.Tensor


@dataclass
class RecurrentState:
    """Hidden/cell states; ``None`` entries mean a fresh (all-zero) state."""

    predictor: list | None = None
    prior: tuple | None = None
    inference: tuple | None = None


class Encoder(nn.Module):
    def __init__(self, filters, kernels, slope: float):
        super().__init__()
        chans = [1, *filters]
        self.convs = nn.ModuleList(
            nn.Conv2d(cin, cout, k, stride=2, padding=k // 2) for cin, cout, k in zip(chans[:-1], chans[1:], kernels)
        )
        self.slope = slope

    def forward(self, x):
        for conv in self.convs:
            x = F.leaky_relu(conv(x), self.slope)
        return x


class Decoder(nn.Module):
    """Mirror of the encoder built from stride-2 transposed convolutions."""

    def __init__(self, in_channels: int, filters, kernels, slope: float):
        super().__init__()
        out_chans = [*reversed(filters[:-1]), 1]
        in_chans = [in_channels, *out_chans[:-1]]
        self.deconvs = nn.ModuleList(
            nn.ConvTranspose2d(cin, cout, k, stride=2, padding=k // 2, output_padding=1)
            for cin, cout, k in zip(in_chans, out_chans, reversed(kernels))
        )
        self.slope = slope

    def forward(self, x):
        for i, deconv in enumerate(self.deconvs):
            x = deconv(x)
            if i < len(self.deconvs) - 1:
                x = F.leaky_relu(x, self.slope)
        return torch.sigmoid(x)


class GaussianHead(nn.Module):
    """Stride-2 conv, LSTM and two linear layers emitting mean and log-variance."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        c, h, w = config.feature_shape
        k = config.head_kernel
        self.conv = nn.Conv2d(c, config.head_filters, k, stride=2, padding=k // 2)
        flat = config.head_filters * math.ceil(h / 2) * math.ceil(w / 2)
        self.lstm = LSTMCell(flat, config.lstm_units)
        self.mean = nn.Linear(config.lstm_units, config.latent_dim)
        self.log_variance = nn.Linear(config.lstm_units, config.latent_dim)
        self.slope = config.leaky_slope
        self.clamp = config.logvar_clamp

    def forward(self, features, state=None):
        x = F.leaky_relu(self.conv(features), self.slope).flatten(1)
        if state is None:
            state = self.lstm.zero_state(x.shape[0], x)
        h, c = self.lstm(x, state)
        logvar = torch.clamp(self.log_variance(h), -self.clamp, self.clamp)
        return GaussianParams(self.mean(h), logvar), (h, c)


def sample_latent(params: GaussianParams, noise: torch.Tensor) -> torch.Tensor:
    """Reparameterised draw ``mean + exp(log_variance / 2) * noise``."""
    if noise.shape[-1] != params.mean.shape[-1]:
        raise ShapeError(f"noise has {noise.shape[-1]} dims, latent has {params.mean.shape[-1]}")
    return params.mean + torch.exp(0.5 * params.log_variance) * noise


class SVFPModel(nn.Module):
    """Encoder / ConvLSTM predictor / decoder with learned prior and inference heads.

    Frames enter and leave as ``(B, H, W)`` tensors in normalized encoding;
    zero padding to a multiple of ``2 ** len(encoder_filters)`` and the
    matching crop happen inside.
    """

    kind = "svfp"

    def __init__(self, config: ModelConfig = ModelConfig(), seed: int = 0):
        super().__init__()
        self.config = config
        cfg = config
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.encoder = Encoder(cfg.encoder_filters, cfg.encoder_kernels, cfg.leaky_slope)
            if not cfg.share_encoder:
                self.prior_encoder = Encoder(cfg.encoder_filters, cfg.encoder_kernels, cfg.leaky_slope)
                self.inference_encoder = Encoder(cfg.encoder_filters, cfg.encoder_kernels, cfg.leaky_slope)
            self.predictor = ConvLSTMStack(
                cfg.encoder_filters[-1] + cfg.latent_dim, cfg.predictor_filters, cfg.predictor_layers, cfg.predictor_kernel
            )
            self.decoder = Decoder(cfg.predictor_filters, cfg.encoder_filters, cfg.encoder_kernels, cfg.leaky_slope)
            self.prior = GaussianHead(cfg)
            self.inference = GaussianHead(cfg)
            init_weights(self, cfg.leaky_slope)

    # -- shape helpers -------------------------------------------------
    def _check_frames(self, frames: torch.Tensor) -> None:
        if frames.shape[-2:] != (self.config.frame_height, self.config.frame_width):
            raise ShapeError(
                f"frames are {tuple(frames.shape[-2:])}, model expects "
                f"{(self.config.frame_height, self.config.frame_width)}"
            )

    def pad(self, frames: torch.Tensor) -> torch.Tensor:
        """``(B, H, W)`` -> zero-padded ``(B, 1, Hp, Wp)``."""
        self._check_frames(frames)
        hp, wp = self.config.padded_shape
        h, w = frames.shape[-2:]
        return F.pad(frames.unsqueeze(1), (0, wp - w, 0, hp - h))

    def crop(self, frames: torch.Tensor) -> torch.Tensor:
        return frames[:, 0, : self.config.frame_height, : self.config.frame_width]

    # -- components ----------------------------------------------------
    def encode(self, x: torch.Tensor, encoder: nn.Module | None = None) -> torch.Tensor:
        """Padded ``(B, 1, Hp, Wp)`` frames -> ``(B, C, Hp/16, Wp/16)`` features."""
        m = self.config.multiple
        if x.dim() != 4 or x.shape[1] != 1 or x.shape[-2] % m or x.shape[-1] % m:
            raise ShapeError(f"encoder input must be (B, 1, H, W) with H, W divisible by {m}, got {tuple(x.shape)}")
        return (encoder or self.encoder)(x)

    def decode(self, features: torch.Tensor) -> torch.Tensor:
        """Predictor features -> padded ``(B, 1, Hp, Wp)`` frames in [0, 1]."""
        _, h, w = self.config.feature_shape
        if features.dim() != 4 or features.shape[1:] != (self.config.predictor_filters, h, w):
            raise ShapeError(f"decoder expects (B, {self.config.predictor_filters}, {h}, {w}), got {tuple(features.shape)}")
        return self.decoder(features)

    def _head_encoder(self, which: str):
        if self.config.share_encoder:
            return self.encoder
        return self.prior_encoder if which == "prior" else self.inference_encoder

    def gaussian_head_step(self, frame: torch.Tensor, which: str, state: RecurrentState):
        """Feed one ``(B, H, W)`` frame to the prior or inference head.

        Returns the Gaussian parameters and the state with that head advanced.
        """
        if which not in ("prior", "inference"):
            raise ValueError(f"unknown head {which!r}")
        feats = self.encode(self.pad(frame), self._head_encoder(which))
        params, hs = getattr(self, which)(feats, getattr(state, which))
        new = RecurrentState(state.predictor, state.prior, state.inference)
        setattr(new, which, hs)
        return params, new

    sample_latent = staticmethod(sample_latent)

    def predict_step(self, features: torch.Tensor, z: torch.Tensor, state: RecurrentState):
        if z.dim() != 2 or z.shape[1] != self.config.latent_dim:
            raise ShapeError(f"latent must be (B, {self.config.latent_dim}), got {tuple(z.shape)}")
        zmap = z[:, :, None, None].expand(-1, -1, *features.shape[-2:])
        out, ps = self.predictor(torch.cat([features, zmap], dim=1), state.predictor)
        return out, RecurrentState(ps, state.prior, state.inference)

    def predict_next_frame(self, prev: torch.Tensor, z: torch.Tensor, state: RecurrentState):
        """One deterministic predictor step: previous frame and latent -> next frame."""
        out, state = self.predict_step(self.encode(self.pad(prev)), z, state)
        return self.crop(self.decode(out)), state

    # -- one full time step -------------------------------------------
    def step(self, prev: torch.Tensor, state: RecurrentState, noise: torch.Tensor,
             target: torch.Tensor | None = None, use_mean: bool = False):
        """Advance all recurrences by one frame.

        With ``target`` given the latent is drawn from the inference head
        (which consumes ``target``); otherwise from the prior. Returns
        ``(prediction, prior_params, posterior_params_or_None, state)``.
        """
        feats = self.encode(self.pad(prev))
        prior_feats = feats if self.config.share_encoder else self.encode(self.pad(prev), self.prior_encoder)
        p, prior_state = self.prior(prior_feats, state.prior)
        q, inf_state = None, state.inference
        if target is not None:
            q, inf_state = self.inference(self.encode(self.pad(target), self._head_encoder("inference")), state.inference)
        src = q if q is not None else p
        z = src.mean if use_mean else sample_latent(src, noise)
        out, ps = self.predictor(
            torch.cat([feats, z[:, :, None, None].expand(-1, -1, *feats.shape[-2:])], dim=1), state.predictor
        )
        pred = self.crop(self.decode(out))
        return pred, p, q, RecurrentState(ps, prior_state, inf_state)

    def teacher_forced(self, frames: torch.Tensor, noise: torch.Tensor):
        """Posterior-driven pass over ``(B, T, H, W)`` true frames.

        ``noise`` is ``(T, B, latent_dim)``. Step ``i`` predicts frame ``i``
        from frame ``i - 1`` (a blank frame for ``i = 0``). Returns the
        ``(B, T, H, W)`` predictions and per-step posterior and prior params.
        """
        self._check_frames(frames)
        b, t = frames.shape[:2]
        if noise.shape != (t, b, self.config.latent_dim):
            raise ShapeError(f"noise must be {(t, b, self.config.latent_dim)}, got {tuple(noise.shape)}")
        state = RecurrentState()
        prev = frames.new_zeros(b, *frames.shape[2:])
        preds, qs, ps = [], [], []
        for i in range(t):
            pred, p, q, state = self.step(prev, state, noise[i], target=frames[:, i])
            preds.append(pred)
            qs.append(q)
            ps.append(p)
            prev = frames[:, i]
        return torch.stack(preds, 1), qs, ps
