"""Run configuration: one JSON document covering data, models, training and evaluation.

Sub-seeds are not configurable on their own; they derive from the global
``seed`` by fixed offsets (see :meth:`RunConfig.seeds`).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .baseline import BaselineConfig
from .data.store import DataConfig
from .data.synthetic import SyntheticConfig
from .errors import ConfigurationError
from .model import ModelConfig
from .trainer import TrainConfig

# model/baseline geometry follows the dataset, seeds follow the global seed
_DERIVED = {
    "synthetic": {"seed"},
    "train": {"seed"},
    "model": {"frame_height", "frame_width", "n_inputs", "n_predict"},
    "baseline": {"frame_height", "frame_width", "n_inputs", "n_predict"},
}


@dataclass(frozen=True)
class EvalConfig:
    members: int = 10
    n_predict: int = 10
    n_strips: int = 3
    single_member: bool = False


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def seeds(self) -> dict[str, int]:
        s = self.seed
        return {"data": 10_000 * s, "init": s + 1, "train": s + 2, "forecast": s + 3}

    def resolved(self, frame_shape: tuple[int, int] | None = None) -> "RunConfig":
        """Copy with every derived field filled in."""
        sd = self.seeds()
        data = replace(self.data, synthetic=replace(self.data.synthetic, seed=sd["data"]))
        geom = {"n_inputs": data.n_inputs, "n_predict": data.n_predict}
        if frame_shape is not None:
            geom.update(frame_height=frame_shape[0], frame_width=frame_shape[1])
        else:
            ds = data.downsample
            geom.update(frame_height=-(-data.synthetic.height // ds), frame_width=-(-data.synthetic.width // ds))
        return replace(
            self,
            data=data,
            model=replace(self.model, **geom),
            baseline=replace(self.baseline, **geom),
            train=replace(self.train, seed=sd["train"]),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        """Build from JSON; derived keys are accepted only if they match what they derive to."""
        _reject_unknown(d, {f.name for f in fields(cls)}, "")
        d = json.loads(json.dumps(d))
        given = {}
        if isinstance(d.get("data"), dict) and isinstance(d["data"].get("synthetic"), dict):
            syn = d["data"]["synthetic"]
            given.update({("synthetic", k): syn.pop(k) for k in _DERIVED["synthetic"] & set(syn)})
        for key in ("train", "model", "baseline"):
            if isinstance(d.get(key), dict):
                given.update({(key, k): d[key].pop(k) for k in _DERIVED[key] & set(d[key])})
        kw = {}
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        if "data" in d:
            dd = dict(d["data"])
            syn = dd.pop("synthetic", {})
            _reject_unknown(dd, {f.name for f in fields(DataConfig)} - {"synthetic"}, "data.")
            _reject_unknown(syn, {f.name for f in fields(SyntheticConfig)} - _DERIVED["synthetic"], "data.synthetic.")
            kw["data"] = DataConfig(synthetic=_tuples(SyntheticConfig, syn), **dd)
        for key, typ in (("model", ModelConfig), ("baseline", BaselineConfig), ("train", TrainConfig),
                         ("evaluation", EvalConfig)):
            if key in d:
                sub = d[key]
                _reject_unknown(sub, {f.name for f in fields(typ)} - _DERIVED.get(key, set()), key + ".")
                kw[key] = _tuples(typ, sub)
        cfg = cls(**kw)
        if given:
            _check_derived(cfg, given)
        return cfg


def _check_derived(cfg: RunConfig, given: dict) -> None:
    res = cfg.resolved()
    # frame dims follow the dataset on disk; only the model and baseline must agree
    frame = {k: v for (sec, k), v in given.items() if sec in ("model", "baseline") and k.startswith("frame_")}
    for (sec, key), value in given.items():
        if key.startswith("frame_"):
            if frame.get(key) != value:
                raise ConfigurationError(f"model and baseline disagree on {key}")
            continue
        obj = res.data.synthetic if sec == "synthetic" else getattr(res, sec)
        expected = getattr(obj, key)
        if value != expected:
            raise ConfigurationError(f"{sec}.{key} = {value!r} is derived and must equal {expected!r}")


def _tuples(typ, d: dict):
    return typ(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _reject_unknown(d: dict, allowed: set[str], prefix: str) -> None:
    if not isinstance(d, dict):
        raise ConfigurationError(f"{prefix or 'config'} must be a mapping")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown or non-configurable keys: {', '.join(prefix + k for k in unknown)}")


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        return RunConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def write_config(path, config: RunConfig) -> None:
    with open(Path(path), "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


#: Desk-scale setup: 64x64 native 1-km frames, downsampled to 32x32.
DESK = {
    "seed": 0,
    "data": {
        "n_sequences": 110,
        "test_fraction": 0.35,
        "downsample": 2,
        "synthetic": {
            "height": 64, "width": 64, "n_cells": 5,
            "radius_range": [3.0, 8.0], "speed_range": [0.3, 1.0],
        },
    },
    "train": {"max_epochs": 30, "patience": 3},
}


def desk_config(**overrides) -> RunConfig:
    d = json.loads(json.dumps(DESK))
    d.update(overrides)
    return RunConfig.from_dict(d)
