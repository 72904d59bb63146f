"""Stochastic variational frame prediction with a learned prior for radar precipitation nowcasting."""
from .baseline import BaselineConfig, ConvLSTMBaseline, baseline_rollout
from .config import RunConfig, desk_config, load_config
from .errors import (
    CheckpointError,
    ConfigurationError,
    DataError,
    DomainError,
    NowcastError,
    NumericalError,
    ShapeError,
)
from .forecaster import Forecast, ensemble_forecast, rollout
from .model import GaussianParams, ModelConfig, RecurrentState, SVFPModel, sample_latent
from .objective import LossBreakdown, elbo_loss, kl_diag_gaussians, reconstruction_loss
from .trainer import EpochMetrics, TrainConfig, Trainer, fit, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
