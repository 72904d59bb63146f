"""Per-lead-time SSIM scores for SVFP ensembles, the baseline, or any callable forecaster."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from ..baseline import ConvLSTMBaseline, baseline_rollout
from ..errors import ConfigurationError, DataError
from ..forecaster import DEFAULT_MEMBERS, rollout_batch
from ..model import SVFPModel
from .ssim import ssim

Z95 = 1.959963984540054


@dataclass
class LeadTimeScore:
    lead: int
    mean: float
    ci: float
    n: int
    kind: str = "forecast"  # or "reconstruction"
    model: str = ""


@dataclass
class Evaluation:
    model: str
    forecast: np.ndarray  # (N, n_p) per-sample SSIM
    reconstruction: np.ndarray | None = None  # (N, n_i), SVFP only
    scores: list[LeadTimeScore] = field(default_factory=list)
    examples: dict[int, dict] = field(default_factory=dict)


def aggregate(per_sample: np.ndarray, kind: str = "forecast", model: str = "") -> list[LeadTimeScore]:
    """Mean and normal-approximation 95% half-width per column of ``(N, L)`` scores."""
    x = np.asarray(per_sample, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ConfigurationError("no samples to aggregate")
    mean = x.mean(axis=0)
    ci = Z95 * x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(x.shape[1])
    return [LeadTimeScore(j + 1, float(mean[j]), float(ci[j]), n, kind, model) for j in range(x.shape[1])]


def persistence(inputs: np.ndarray, n_predict: int) -> np.ndarray:
    """Repeat the last input frame."""
    return np.repeat(inputs[-1:], n_predict, axis=0)


def _model_name(model) -> str:
    return getattr(model, "kind", getattr(model, "__name__", type(model).__name__))


def evaluate(model, test: np.ndarray, n_inputs: int = 5, n_predict: int = 10, members: int = DEFAULT_MEMBERS,
             base_seed: int = 0, single_member: bool = False, keep_examples=(), name: str | None = None) -> Evaluation:
    """SSIM of forecasts against ground truth, per sample and lead time.

    ``test`` is ``(N, T, H, W)`` normalized windows with
    ``T >= n_inputs + n_predict``. ``model`` is an :class:`SVFPModel`
    (scored on its ``members``-member ensemble mean, or on the first member
    with ``single_member``), a :class:`ConvLSTMBaseline`, or a callable
    ``f(inputs, n_predict) -> frames``. Sample ``j`` of an SVFP ensemble
    uses seeds ``base_seed + 1000 * j + k``.
    """
    test = np.asarray(test)
    if test.ndim != 4 or len(test) == 0:
        raise ConfigurationError("evaluation needs a non-empty (N, T, H, W) test set")
    if test.shape[1] < n_inputs + n_predict:
        raise DataError(f"test windows hold {test.shape[1]} frames, need {n_inputs + n_predict}")
    name = name or _model_name(model)
    fc = np.empty((len(test), n_predict))
    rec = np.empty((len(test), n_inputs)) if isinstance(model, SVFPModel) else None
    examples = {}
    for j, window in enumerate(test):
        inputs, truth = window[:n_inputs], window[n_inputs : n_inputs + n_predict]
        recon = None
        if isinstance(model, SVFPModel):
            model.eval()
            k = 1 if single_member else members
            x = torch.as_tensor(inputs, dtype=next(model.parameters()).dtype).expand(k, -1, -1, -1)
            gens = [torch.Generator().manual_seed(base_seed + 1000 * j + m) for m in range(k)]
            r, out = rollout_batch(model, x, n_predict, gens)
            pred = out.mean(0).numpy()
            recon = r.mean(0).numpy()
            rec[j] = ssim(recon, inputs)
        elif isinstance(model, ConvLSTMBaseline):
            model.eval()
            x = torch.as_tensor(inputs, dtype=next(model.parameters()).dtype)
            pred = baseline_rollout(model, x, n_predict).numpy()
        else:
            pred = np.asarray(model(inputs, n_predict))
        fc[j] = ssim(pred, truth)
        if j in keep_examples:
            examples[j] = {"inputs": inputs, "truth": truth, "forecast": pred, "reconstruction": recon}
    scores = aggregate(fc, "forecast", name)
    if rec is not None:
        scores += aggregate(rec, "reconstruction", name)
    return Evaluation(name, fc, rec, scores, examples)


def write_scores(path, evaluations: list[Evaluation]) -> None:
    """Newline-delimited score records plus a sidecar with the per-sample SSIMs."""
    path = Path(path)
    with open(path, "w") as fh:
        for ev in evaluations:
            for s in ev.scores:
                fh.write(json.dumps(asdict(s)) + "\n")
    side = {ev.model: {"forecast": ev.forecast.tolist(),
                       "reconstruction": None if ev.reconstruction is None else ev.reconstruction.tolist()}
            for ev in evaluations}
    with open(path.with_name(path.stem + ".per_sample.json"), "w") as fh:
        json.dump(side, fh)


def read_scores(path) -> list[LeadTimeScore]:
    with open(path) as fh:
        return [LeadTimeScore(**json.loads(line)) for line in fh if line.strip()]


def read_per_sample(path) -> dict[str, dict[str, np.ndarray | None]]:
    path = Path(path)
    with open(path.with_name(path.stem + ".per_sample.json")) as fh:
        raw = json.load(fh)
    return {m: {k: None if v is None else np.asarray(v) for k, v in d.items()} for m, d in raw.items()}


def group_by_model(scores: list[LeadTimeScore]) -> dict[str, list[LeadTimeScore]]:
    out: dict[str, list[LeadTimeScore]] = {}
    for s in scores:
        out.setdefault(s.model, []).append(s)
    return out


PseudoModel = Callable[[np.ndarray, int], np.ndarray]
