"""End-to-end synthetic experiment: data, both models, evaluation, figures."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .baseline import baseline_rollout
from .config import RunConfig, write_config
from .data.store import Dataset, build_synthetic_dataset
from .evaluation import Evaluation, emit_figures, evaluate, write_scores
from .forecaster import ensemble_forecast
from .trainer import EpochMetrics, build_model, fit, zeros_predictor_loss

log = logging.getLogger(__name__)


@dataclass
class ModelRun:
    model: object
    metrics: list[EpochMetrics]
    zeros_val_loss: float
    evaluation: Evaluation | None = None

    @property
    def best_val(self) -> float:
        return min(m.val_total for m in self.metrics)


@dataclass
class ExperimentResult:
    config: RunConfig
    dataset: Dataset
    runs: dict[str, ModelRun] = field(default_factory=dict)
    figures: list[Path] = field(default_factory=list)
    spread: dict[str, float] = field(default_factory=dict)


def _val_split(data: np.ndarray, cfg: RunConfig) -> np.ndarray:
    from .trainer import split_validation

    _, val = split_validation(len(data), cfg.train.validation_fraction, cfg.train.seed)
    return data[val]


def ensemble_spread(model, test: np.ndarray, n_inputs: int, n_predict: int, members: int, base_seed: int) -> float:
    """Fraction of rainy target pixels with strictly positive ensemble spread."""
    hits = rainy = 0
    for j, window in enumerate(test):
        truth = window[n_inputs : n_inputs + n_predict]
        if hasattr(model, "teacher_forced") and getattr(model, "kind", "") == "svfp":
            fc = ensemble_forecast(model, window[:n_inputs], n_predict, members, base_seed + 1000 * j)
            spread = np.ptp(fc.members, axis=0)
        else:
            x = torch.as_tensor(window[:n_inputs], dtype=next(model.parameters()).dtype)
            runs = np.stack([baseline_rollout(model, x, n_predict).numpy() for _ in range(members)])
            spread = np.ptp(runs, axis=0)
        mask = truth > 0
        rainy += int(mask.sum())
        hits += int((spread[mask] > 0).sum())
    return hits / max(rainy, 1)


def run_experiment(out_dir, config: RunConfig, models=("svfp", "convlstm"), spread_samples: int = 10) -> ExperimentResult:
    """Generate data, train ``models`` to early stop, score them and draw the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.resolved()
    ds = build_synthetic_dataset(out / "data", cfg.data)
    cfg = cfg.resolved(ds.frame_shape)
    write_config(out / "run_config.json", cfg)
    train, test = ds.windows("train"), ds.windows("test")
    n_i, n_p = cfg.data.n_inputs, cfg.evaluation.n_predict
    result = ExperimentResult(cfg, ds)
    strips = tuple(range(min(cfg.evaluation.n_strips, len(test))))
    for kind in models:
        mcfg = cfg.model if kind == "svfp" else cfg.baseline
        model = build_model(kind, mcfg, cfg.seeds()["init"])
        run_dir = out / kind
        run_dir.mkdir(exist_ok=True)
        metrics_path = run_dir / "metrics.jsonl"
        metrics_path.unlink(missing_ok=True)
        metrics_path.with_name("metrics.timing.jsonl").unlink(missing_ok=True)
        _, metrics = fit(model, train, cfg.train, checkpoint_dir=run_dir, log_path=metrics_path)
        model.eval()
        zero = zeros_predictor_loss(model, _val_split(train, cfg))
        ev = evaluate(model, test, n_i, n_p, cfg.evaluation.members, cfg.seeds()["forecast"],
                      cfg.evaluation.single_member, keep_examples=strips)
        result.runs[kind] = ModelRun(model, metrics, zero, ev)
        result.spread[kind] = ensemble_spread(model, test[:spread_samples], n_i, n_p, cfg.evaluation.members,
                                              cfg.seeds()["forecast"])
        log.info("%s: best val %.3f (all-zeros %.3f)", kind, result.runs[kind].best_val, zero)
    evals = [r.evaluation for r in result.runs.values()]
    write_scores(out / "scores.jsonl", evals)
    examples = []
    for j in strips:
        first = evals[0].examples[j]
        rows = {"truth": np.concatenate([first["inputs"], first["truth"]])}
        for ev in evals:
            ex = ev.examples[j]
            recon = list(ex["reconstruction"]) if ex["reconstruction"] is not None else [None] * n_i
            rows[ev.model] = recon + list(ex["forecast"])
        examples.append(rows)
    result.figures = emit_figures([s for ev in evals for s in ev.scores], examples, out / "figures", n_i,
                                  ds.manifest.timestep_min, ds.class_table)
    return result
