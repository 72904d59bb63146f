"""Command-line entry point: ``svfp-nowcast {gen-data,train,forecast,evaluate,plot}``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from .baseline import baseline_rollout
from .config import RunConfig, load_config, write_config
from .data.radar import normalized_to_class
from .data.store import MANIFEST, Dataset, DatasetManifest, SequenceEntry, build_synthetic_dataset, write_manifest, write_sequence
from .errors import ConfigurationError, DomainError, NowcastError, ShapeError
from .evaluation import emit_figures, evaluate, read_scores, write_scores
from .evaluation.figures import plot_ssim_curves
from .forecaster import ensemble_forecast
from .model import SVFPModel
from .trainer import build_model, fit, load_checkpoint

log = logging.getLogger("svfp_nowcast")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _prepare_out(out: Path, force: bool) -> Path:
    out = Path(out)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise ConfigurationError(f"{out} exists and is not empty; pass --force to overwrite")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _open_dataset(path) -> Dataset:
    if not (Path(path) / MANIFEST).is_file():
        raise ConfigurationError(f"no dataset at {path}; run gen-data first")
    return Dataset(path)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- commands ------------------------------------------------------------
def cmd_gen_data(args) -> Path:
    cfg = _config(args)
    if args.sequences is not None:
        if args.sequences < 0:
            raise ConfigurationError("--sequences must be >= 0")
        cfg = replace(cfg, data=replace(cfg.data, n_sequences=args.sequences))
    cfg = cfg.resolved()
    out = _prepare_out(args.out, args.force)
    ds = build_synthetic_dataset(out, cfg.data)
    write_config(out / "run_config.json", cfg)
    n_train = sum(len(e.windows) for e in ds.entries("train"))
    n_test = sum(len(e.windows) for e in ds.entries("test"))
    print(f"wrote {len(ds.entries())} sequences to {out} ({n_train} train / {n_test} test windows)")
    return out


def cmd_train(args) -> Path:
    cfg = _config(args)
    ds = _open_dataset(args.data)
    cfg = cfg.resolved(ds.frame_shape)
    data = ds.windows("train")
    if len(data) == 0:
        raise ConfigurationError(f"dataset {args.data} has no training windows")
    out = Path(args.out)
    resume = None
    if args.resume:
        resume = out / "last.pt"
        if not resume.is_file():
            raise ConfigurationError(f"nothing to resume: {resume} not found")
    else:
        out = _prepare_out(out, args.force)
    model_cfg = cfg.model if args.model == "svfp" else cfg.baseline
    model = build_model(args.model, model_cfg, cfg.seeds()["init"])
    write_config(out / "run_config.json", cfg)
    _, metrics = fit(model, data, cfg.train, checkpoint_dir=out, resume_from=resume,
                     log_path=out / "metrics.jsonl", max_epochs=args.max_epochs)
    best = min(metrics, key=lambda m: m.val_total)
    print(f"trained {args.model} for {len(metrics)} epochs; best epoch {best.epoch} val loss {best.val_total:.4f}")
    return out


def _load_model(path, ds: Dataset):
    model, payload = load_checkpoint(path)
    shape = (model.config.frame_height, model.config.frame_width)
    if shape != ds.frame_shape:
        raise ShapeError(f"checkpoint {path} expects {shape} frames, dataset has {ds.frame_shape}")
    model.eval()
    return model, payload


def _export_frames(root: Path, frames: np.ndarray, ds: Dataset, extra: dict) -> None:
    root.mkdir(parents=True, exist_ok=True)
    m = ds.manifest
    classes = normalized_to_class(frames)
    write_sequence(root / "seq_00000.u8", classes)
    man = DatasetManifest(m.height, m.width, m.resolution_km, m.timestep_min, m.n_inputs, len(frames),
                          m.threshold, m.class_table, [SequenceEntry("seq_00000.u8", len(frames), "forecast", [], len(frames))],
                          extra)
    write_manifest(root, man)


def cmd_forecast(args) -> Path:
    cfg = _config(args)
    ds = _open_dataset(args.data)
    model, _ = _load_model(args.checkpoint, ds)
    test = ds.windows("test")
    n_i = ds.manifest.n_inputs
    if not 0 <= args.sample < len(test):
        raise DomainError(f"sample {args.sample} out of range; test split has {len(test)} windows")
    lead = args.lead or cfg.evaluation.n_predict
    if lead < 1:
        raise DomainError("--lead must be >= 1")
    inputs = test[args.sample, :n_i]
    out = _prepare_out(Path(args.out), args.force)
    ident = {"checkpoint": str(args.checkpoint), "checkpoint_sha256": _sha256(args.checkpoint),
             "sample": args.sample, "lead": lead, "model": model.kind}
    if isinstance(model, SVFPModel):
        k = args.members or cfg.evaluation.members
        fc = ensemble_forecast(model, inputs, lead, k, cfg.seeds()["forecast"])
        for j, seed in enumerate(fc.seeds):
            _export_frames(out / f"member_{j:02d}", fc.members[j], ds, {**ident, "seed": seed})
        _export_frames(out / "mean", fc.mean, ds, {**ident, "members": fc.seeds})
        np.savez(out / "forecast.npz", members=fc.members, mean=fc.mean, inputs=fc.inputs, seeds=fc.seeds)
        ident["seeds"] = fc.seeds
    else:
        x = torch.as_tensor(inputs, dtype=next(model.parameters()).dtype)
        frames = baseline_rollout(model, x, lead).numpy()
        _export_frames(out / "member_00", frames, ds, ident)
        np.savez(out / "forecast.npz", members=frames[None], mean=frames, inputs=inputs)
        ident["seeds"] = []
    with open(out / "forecast_manifest.json", "w") as fh:
        json.dump(ident, fh, indent=2)
    write_config(out / "run_config.json", cfg.resolved(ds.frame_shape))
    print(f"wrote {lead}-frame {model.kind} forecast for test sample {args.sample} to {out}")
    return out


def cmd_evaluate(args) -> Path:
    cfg = _config(args)
    ds = _open_dataset(args.data)
    test = ds.windows("test")
    if len(test) == 0:
        raise ConfigurationError(f"dataset {args.data} has no test windows")
    n_i, n_p = ds.manifest.n_inputs, args.lead or cfg.evaluation.n_predict
    k = args.members or cfg.evaluation.members
    out = _prepare_out(Path(args.out), args.force)
    strips = list(range(min(cfg.evaluation.n_strips, len(test))))
    evaluations = []
    for path in args.checkpoint:
        model, _ = _load_model(path, ds)
        evaluations.append(evaluate(model, test, n_i, n_p, k, cfg.seeds()["forecast"],
                                    cfg.evaluation.single_member, keep_examples=strips))
    names = [e.model for e in evaluations]
    if len(set(names)) != len(names):
        for i, e in enumerate(evaluations):
            e.model = f"{e.model}-{i}"
            for s in e.scores:
                s.model = e.model
    write_scores(out / "scores.jsonl", evaluations)
    examples = []
    for j in strips:
        ex0 = evaluations[0].examples[j]
        rows = {"truth": np.concatenate([ex0["inputs"], ex0["truth"]])}
        for e in evaluations:
            ex = e.examples[j]
            rows[e.model] = list(ex["reconstruction"]) + list(ex["forecast"]) if ex["reconstruction"] is not None \
                else [None] * n_i + list(ex["forecast"])
        examples.append(rows)
    emit_figures([s for e in evaluations for s in e.scores], examples, out, n_i, ds.manifest.timestep_min,
                 ds.class_table)
    write_config(out / "run_config.json", cfg.resolved(ds.frame_shape))
    for e in evaluations:
        lead = [s for s in e.scores if s.kind == "forecast"]
        print(f"{e.model}: SSIM lead 1 {lead[0].mean:.4f}, lead {lead[-1].lead} {lead[-1].mean:.4f}")
    return out


def cmd_plot(args) -> Path:
    scores = [s for p in args.scores for s in read_scores(p)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = plot_ssim_curves(scores, out / "ssim_curves.png", args.inputs)
    print(f"wrote {path}")
    return path


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="svfp-nowcast", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=True):
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="global seed (overrides the config)")
        sp.add_argument("--out", type=Path, required=out_required)
        sp.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")

    sp = sub.add_parser("gen-data", help="generate a synthetic dataset")
    common(sp)
    sp.add_argument("--sequences", type=int, help="number of sequences (overrides the config)")
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train", help="train the SVFP model or the ConvLSTM baseline")
    common(sp)
    sp.add_argument("--data", type=Path, required=True)
    sp.add_argument("--model", choices=("svfp", "convlstm"), default="svfp")
    sp.add_argument("--resume", action="store_true", help="continue from OUT/last.pt")
    sp.add_argument("--max-epochs", type=int)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("forecast", help="forecast one test sample")
    common(sp)
    sp.add_argument("--data", type=Path, required=True)
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--sample", type=int, default=0)
    sp.add_argument("--lead", type=int)
    sp.add_argument("--members", type=int)
    sp.add_argument("--model", choices=("svfp", "convlstm"), help="ignored; the checkpoint names its model")
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("evaluate", help="score checkpoints on the test split and draw figures")
    common(sp)
    sp.add_argument("--data", type=Path, required=True)
    sp.add_argument("--checkpoint", type=Path, nargs="+", required=True)
    sp.add_argument("--lead", type=int)
    sp.add_argument("--members", type=int)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("plot", help="redraw the SSIM figure from stored scores")
    sp.add_argument("--scores", type=Path, nargs="+", required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--inputs", type=int, default=5)
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except NowcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
