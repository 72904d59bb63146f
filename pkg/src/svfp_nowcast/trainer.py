"""Teacher-forced training with Adam, a validation holdout and early stopping.

Both models train on windows of true frames. The SVFP loss covers every
frame of the window (each predicted from the true frame before it with a
posterior latent); the baseline loss covers frames 2..T.
"""
from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .baseline import BaselineConfig, ConvLSTMBaseline
from .errors import CheckpointError, ConfigurationError, NumericalError, ShapeError
from .model import ModelConfig, SVFPModel
from .objective import LossBreakdown, elbo_loss, reconstruction_loss

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "svfp-nowcast-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    validation_fraction: float = 0.1
    grad_clip: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")
        if not 0 < self.validation_fraction < 1:
            raise ConfigurationError("validation_fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1 or self.learning_rate <= 0:
            raise ConfigurationError("batch_size, max_epochs and learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochMetrics:
    epoch: int
    train_reconstruction: float
    train_kl: float
    train_total: float
    val_reconstruction: float
    val_kl: float
    val_total: float
    wall_time: float = 0.0

    def record(self, with_time: bool = False) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d


class EarlyStopping:
    """Tracks the best validation loss; signals a stop after ``patience`` epochs without improvement."""

    def __init__(self, patience: int = 10):
        if patience < 1:
            raise ConfigurationError("patience must be >= 1")
        self.patience = patience
        self.best = float("inf")
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record ``loss`` for ``epoch``; returns True once training should stop."""
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, epoch, 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.patience

    def state_dict(self) -> dict:
        return {"best": self.best, "best_epoch": self.best_epoch, "bad_epochs": self.bad_epochs}

    def load_state_dict(self, d: dict) -> None:
        self.best, self.best_epoch, self.bad_epochs = d["best"], d["best_epoch"], d["bad_epochs"]


def split_validation(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded random holdout; returns sorted (train, validation) index arrays."""
    n_val = max(1, int(round(n * fraction))) if n > 1 else 0
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def sequence_loss(model, frames: torch.Tensor, noise: torch.Tensor | None = None, beta: float | None = None) -> LossBreakdown:
    """Training loss of ``model`` on ``(B, T, H, W)`` windows.

    ``noise`` is ``(B, T, latent_dim)``; required for the SVFP model only.
    """
    if isinstance(model, SVFPModel):
        beta = model.config.beta if beta is None else beta
        preds, qs, ps = model.teacher_forced(frames, noise.transpose(0, 1))
        return elbo_loss(preds, frames, qs, ps, beta)
    preds = model.teacher_forced(frames)
    recon = reconstruction_loss(preds, frames[:, 1:])
    return LossBreakdown(recon, recon.new_zeros(()), recon, 0.0)


def zeros_predictor_loss(model, frames) -> float:
    """Loss of a predictor that always outputs dry frames, on the same terms as ``sequence_loss``."""
    x = torch.as_tensor(np.asarray(frames), dtype=torch.float64)
    target = x if isinstance(model, SVFPModel) else x[:, 1:]
    return float(reconstruction_loss(torch.zeros_like(target), target))


def build_model(kind: str, config: dict | ModelConfig | BaselineConfig, seed: int = 0):
    if kind == "svfp":
        cfg = config if isinstance(config, ModelConfig) else ModelConfig(**config)
        return SVFPModel(cfg, seed)
    if kind == "convlstm":
        cfg = config if isinstance(config, BaselineConfig) else BaselineConfig(**config)
        return ConvLSTMBaseline(cfg, seed)
    raise ConfigurationError(f"unknown model kind {kind!r}")


class Trainer:
    """Owns the optimizer and RNG streams for one model."""

    def __init__(self, model, config: TrainConfig = TrainConfig()):
        self.model = model
        self.config = config
        self.optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999), eps=1e-8)
        self.noise_gen = torch.Generator().manual_seed(config.seed)
        self.shuffle_rng = np.random.default_rng(config.seed)
        self.stopper = EarlyStopping(config.patience)
        self.metrics: list[EpochMetrics] = []
        self.epoch = 0
        self.best_state: dict | None = None

    @property
    def dtype(self):
        return next(self.model.parameters()).dtype

    @property
    def latent_dim(self) -> int:
        return self.model.config.latent_dim if isinstance(self.model, SVFPModel) else 0

    def _noise(self, b: int, t: int, generator: torch.Generator) -> torch.Tensor | None:
        if not self.latent_dim:
            return None
        return torch.randn(b, t, self.latent_dim, generator=generator, dtype=torch.float64).to(self.dtype)

    def train_step(self, frames: torch.Tensor) -> LossBreakdown:
        """One Adam update on a ``(B, T, H, W)`` batch."""
        self.model.train()
        noise = self._noise(frames.shape[0], frames.shape[1], self.noise_gen)
        self.optimizer.zero_grad(set_to_none=True)
        loss = sequence_loss(self.model, frames, noise)
        if not torch.isfinite(loss.total):
            raise NumericalError(f"non-finite loss at epoch {self.epoch + 1}: {loss.item()}")
        loss.total.backward()
        norm = torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.grad_clip)
        if not torch.isfinite(norm):
            raise NumericalError(f"non-finite gradient norm at epoch {self.epoch + 1}")
        self.optimizer.step()
        return loss

    @torch.no_grad()
    def evaluate(self, frames: np.ndarray, noise: torch.Tensor | None = None, order=None) -> dict[str, float]:
        """Mean loss terms over ``frames``; per-sample ``noise`` makes the result order-independent."""
        self.model.eval()
        n = len(frames)
        order = np.arange(n) if order is None else np.asarray(order)
        sums = {"reconstruction": 0.0, "kl": 0.0, "total": 0.0}
        bs = self.config.batch_size
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            x = torch.as_tensor(frames[idx], dtype=self.dtype)
            loss = sequence_loss(self.model, x, None if noise is None else noise[idx])
            for k, v in loss.item().items():
                sums[k] += v * len(idx)
        return {k: v / n for k, v in sums.items()}

    def fixed_noise(self, frames: np.ndarray) -> torch.Tensor | None:
        g = torch.Generator().manual_seed(self.config.seed + 1)
        return self._noise(len(frames), frames.shape[1], g)

    def run_epoch(self, train: np.ndarray, val: np.ndarray, val_noise) -> EpochMetrics:
        t0 = time.perf_counter()
        perm = self.shuffle_rng.permutation(len(train))
        sums = np.zeros(3)
        bs = self.config.batch_size
        for start in range(0, len(perm), bs):
            idx = perm[start : start + bs]
            loss = self.train_step(torch.as_tensor(train[idx], dtype=self.dtype))
            sums += len(idx) * np.array([float(loss.reconstruction.detach()), float(loss.kl.detach()), float(loss.total.detach())])
        sums /= len(train)
        v = self.evaluate(val, val_noise)
        self.epoch += 1
        m = EpochMetrics(self.epoch, *sums.tolist(), v["reconstruction"], v["kl"], v["total"], time.perf_counter() - t0)
        self.metrics.append(m)
        return m

    # -- checkpoints ---------------------------------------------------
    def checkpoint(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": self.model.kind,
            "model_config": self.model.config.to_dict(),
            "train_config": self.config.to_dict(),
            "model_state": copy.deepcopy(self.model.state_dict()),
            "optimizer_state": copy.deepcopy(self.optimizer.state_dict()),
            "noise_rng": self.noise_gen.get_state(),
            "shuffle_rng": copy.deepcopy(self.shuffle_rng.bit_generator.state),
            "epoch": self.epoch,
            "early_stop": self.stopper.state_dict(),
            "best_state": copy.deepcopy(self.best_state),
            "metrics": [m.record(with_time=True) for m in self.metrics],
        }

    def restore(self, ckpt: dict) -> None:
        _load_model_state(self.model, ckpt)
        self.optimizer.load_state_dict(ckpt["optimizer_state"])
        self.noise_gen.set_state(ckpt["noise_rng"])
        self.shuffle_rng.bit_generator.state = ckpt["shuffle_rng"]
        self.epoch = ckpt["epoch"]
        self.stopper.load_state_dict(ckpt["early_stop"])
        self.best_state = ckpt["best_state"]
        self.metrics = [EpochMetrics(**m) for m in ckpt["metrics"]]


def _load_model_state(model, ckpt: dict) -> None:
    if ckpt.get("kind") != model.kind:
        raise ShapeError(f"checkpoint holds a {ckpt.get('kind')!r} model, not {model.kind!r}")
    if ckpt["model_config"] != model.config.to_dict():
        diff = {k: (v, ckpt["model_config"].get(k)) for k, v in model.config.to_dict().items()
                if ckpt["model_config"].get(k) != v}
        raise ShapeError(f"checkpoint model config differs from the target model: {diff}")
    try:
        model.load_state_dict(ckpt["model_state"])
    except RuntimeError as exc:
        raise ShapeError(str(exc)) from exc


def save_checkpoint(path, trainer_or_payload) -> None:
    payload = trainer_or_payload.checkpoint() if isinstance(trainer_or_payload, Trainer) else trainer_or_payload
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_checkpoint(path, model=None) -> tuple[object, dict]:
    """Load a checkpoint; returns ``(model, payload)``.

    When ``model`` is given its config must match the stored one, otherwise
    a :class:`ShapeError` is raised. Without it a model is rebuilt from the
    stored config.
    """
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:  # noqa: BLE001 - any unpickling failure means a corrupt file
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {payload.get('version')} != supported {CHECKPOINT_VERSION}")
    if model is None:
        model = build_model(payload["kind"], payload["model_config"])
    _load_model_state(model, payload)
    return model, payload


def fit(model, data: np.ndarray, config: TrainConfig = TrainConfig(), *, checkpoint_dir=None,
        resume_from=None, log_path=None, max_epochs: int | None = None, callback=None):
    """Train until early stopping or ``max_epochs``.

    ``data`` is an ``(N, T, H, W)`` array of normalized windows; a seeded
    ``validation_fraction`` of it is held out. Returns ``(best_checkpoint,
    metrics)`` and leaves the best-epoch weights loaded in ``model``. With
    ``checkpoint_dir`` the last and best checkpoints are written each epoch;
    ``resume_from`` continues a run from a saved last checkpoint.
    """
    data = np.asarray(data)
    if data.ndim != 4 or len(data) < 2:
        raise ConfigurationError("training needs at least two (T, H, W) windows")
    train_idx, val_idx = split_validation(len(data), config.validation_fraction, config.seed)
    train, val = data[train_idx], data[val_idx]
    trainer = Trainer(model, config)
    if resume_from is not None:
        _, ckpt = load_checkpoint(resume_from, model)
        trainer.restore(ckpt)
    val_noise = trainer.fixed_noise(val)
    limit = max_epochs or config.max_epochs
    stop = trainer.stopper.bad_epochs >= config.patience
    best = None
    while not stop and trainer.epoch < limit:
        m = trainer.run_epoch(train, val, val_noise)
        stop = trainer.stopper.update(m.epoch, m.val_total)
        improved = trainer.stopper.best_epoch == m.epoch
        if improved:
            trainer.best_state = copy.deepcopy(model.state_dict())
            best = trainer.checkpoint()
        log.info("epoch %d train %.4f val %.4f", m.epoch, m.train_total, m.val_total)
        if log_path is not None:
            _append_metrics(log_path, m)
        if checkpoint_dir is not None:
            save_checkpoint(Path(checkpoint_dir) / "last.pt", trainer)
            if improved:
                save_checkpoint(Path(checkpoint_dir) / "best.pt", best)
        if callback is not None:
            callback(trainer, m)
    if best is None:
        # resumed run that never improved on the stored best
        best = trainer.checkpoint()
        best["model_state"] = copy.deepcopy(trainer.best_state)
    if trainer.best_state is not None:
        model.load_state_dict(trainer.best_state)
    return best, trainer.metrics


def _append_metrics(path, m: EpochMetrics) -> None:
    path = Path(path)
    with open(path, "a") as fh:
        fh.write(json.dumps(m.record()) + "\n")
    with open(path.with_name(path.stem + ".timing.jsonl"), "a") as fh:
        fh.write(json.dumps({"epoch": m.epoch, "wall_time": m.wall_time}) + "\n")
