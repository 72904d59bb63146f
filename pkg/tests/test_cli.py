import json

import numpy as np
import pytest

from svfp_nowcast.cli import main
from svfp_nowcast.config import RunConfig, desk_config, load_config
from svfp_nowcast.data import SyntheticConfig, generate_synthetic_sequence, passes_rain_filter
from svfp_nowcast.data.store import Dataset
from svfp_nowcast.errors import ConfigurationError

TINY = {
    "seed": 3,
    "data": {
        "n_sequences": 6, "test_fraction": 0.34, "downsample": 2,
        "synthetic": {"height": 32, "width": 32, "n_cells": 4, "radius_range": [2.0, 5.0],
                      "speed_range": [0.3, 1.0], "amplitude_range": [20.0, 80.0]},
    },
    "model": {"encoder_filters": [4, 4, 8, 8], "predictor_filters": 8, "head_filters": 8, "lstm_units": 8,
              "latent_dim": 4},
    "baseline": {"filters": 4},
    "train": {"max_epochs": 2, "patience": 2, "batch_size": 8},
    "evaluation": {"members": 3},
}


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    """Generate data and train both models once for the module."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    c = ["--config", str(cfg)]
    assert main(["gen-data", *c, "--out", str(root / "data")]) == 0
    assert main(["train", *c, "--data", str(root / "data"), "--model", "svfp", "--out", str(root / "svfp")]) == 0
    assert main(["train", *c, "--data", str(root / "data"), "--model", "convlstm", "--out", str(root / "base")]) == 0
    return root, c


def test_gen_data_outputs(run):
    root, _ = run
    ds = Dataset(root / "data")
    assert ds.frame_shape == (16, 16)
    assert len(ds.entries("train")) == 4 and len(ds.entries("test")) == 2
    assert json.loads((root / "data" / "run_config.json").read_text())["data"]["synthetic"]["seed"] == 30_000


def test_train_outputs(run):
    root, _ = run
    for name in ("svfp", "base"):
        d = root / name
        assert (d / "best.pt").is_file() and (d / "last.pt").is_file() and (d / "run_config.json").is_file()
        lines = (d / "metrics.jsonl").read_text().splitlines()
        assert [json.loads(x)["epoch"] for x in lines] == [1, 2]


def test_resume_continues_numbering(run, tmp_path):
    root, c = run
    out = tmp_path / "svfp"
    args = ["train", *c, "--data", str(root / "data"), "--out", str(out)]
    assert main([*args, "--max-epochs", "1"]) == 0
    assert main([*args, "--resume"]) == 0
    lines = (out / "metrics.jsonl").read_text().splitlines()
    assert [json.loads(x)["epoch"] for x in lines] == [1, 2]
    assert lines == (root / "svfp" / "metrics.jsonl").read_text().splitlines()


def test_forecast_svfp_ensemble(run, tmp_path):
    root, c = run
    out = tmp_path / "fc"
    assert main(["forecast", *c, "--data", str(root / "data"), "--checkpoint", str(root / "svfp" / "best.pt"),
                 "--members", "10", "--out", str(out)]) == 0
    members = sorted(p.name for p in out.glob("member_*"))
    assert members == [f"member_{k:02d}" for k in range(10)] and (out / "mean").is_dir()
    man = json.loads((out / "forecast_manifest.json").read_text())
    assert man["model"] == "svfp" and len(man["seeds"]) == 10 and len(man["checkpoint_sha256"]) == 64
    fc = np.load(out / "forecast.npz")
    assert fc["members"].shape == (10, 10, 16, 16)
    m0 = Dataset(out / "member_00")
    assert m0.entries()[0].n_frames == 10


def test_forecast_baseline_single_member_long_lead(run, tmp_path):
    root, c = run
    out = tmp_path / "fc"
    assert main(["forecast", *c, "--data", str(root / "data"), "--checkpoint", str(root / "base" / "best.pt"),
                 "--lead", "20", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("member_*")) == ["member_00"]
    frames = np.load(out / "forecast.npz")["mean"]
    assert frames.shape == (20, 16, 16) and 0 <= frames.min() and frames.max() <= 1


def test_evaluate_and_plot(run, tmp_path):
    root, c = run
    out = tmp_path / "ev"
    assert main(["evaluate", *c, "--data", str(root / "data"), "--checkpoint", str(root / "svfp" / "best.pt"),
                 str(root / "base" / "best.pt"), "--out", str(out)]) == 0
    recs = [json.loads(x) for x in (out / "scores.jsonl").read_text().splitlines()]
    assert {r["model"] for r in recs} == {"svfp", "convlstm"}
    assert sum(r["kind"] == "forecast" for r in recs) == 20
    assert (out / "ssim_curves.png").is_file() and len(list(out.glob("strip_*.png"))) >= 1
    assert main(["plot", "--scores", str(out / "scores.jsonl"), "--out", str(tmp_path / "plot")]) == 0
    assert (tmp_path / "plot" / "ssim_curves.png").is_file()


def test_exit_codes(run, tmp_path, capsys):
    root, c = run
    # non-empty output without --force
    assert main(["gen-data", *c, "--out", str(root / "data")]) == 1
    # missing dataset
    assert main(["train", *c, "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "t")]) == 1
    # sample selector out of range
    assert main(["forecast", *c, "--data", str(root / "data"), "--checkpoint", str(root / "svfp" / "best.pt"),
                 "--sample", "999", "--out", str(tmp_path / "s")]) == 1
    # corrupt checkpoint
    bad = tmp_path / "bad.pt"
    bad.write_bytes(b"junk")
    assert main(["forecast", *c, "--data", str(root / "data"), "--checkpoint", str(bad),
                 "--out", str(tmp_path / "f")]) == 2
    # unknown config key
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"train": {"sed": 4}}))
    assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "g")]) == 1
    # argparse failures
    assert_exit(["train"], 1)
    assert_exit(["frobnicate"], 1)
    # nothing to resume
    assert main(["train", *c, "--data", str(root / "data"), "--resume", "--out", str(tmp_path / "r")]) == 1


def test_gen_data_is_byte_identical_and_allows_empty(run, tmp_path):
    root, c = run
    assert main(["gen-data", *c, "--out", str(tmp_path / "again")]) == 0
    for f in sorted((root / "data").iterdir()):
        assert (tmp_path / "again" / f.name).read_bytes() == f.read_bytes(), f.name
    assert main(["gen-data", *c, "--sequences", "0", "--out", str(tmp_path / "empty")]) == 0
    ds = Dataset(tmp_path / "empty")
    assert ds.entries() == [] and len(ds.windows("train")) == 0
    # training on it is a configuration error, not a crash
    assert main(["train", *c, "--data", str(tmp_path / "empty"), "--out", str(tmp_path / "t")]) == 1


def test_checkpoint_dataset_shape_mismatch(run, tmp_path):
    root, _ = run
    cfg = json.loads(json.dumps(TINY))
    cfg["data"]["downsample"] = 1
    path = tmp_path / "full.json"
    path.write_text(json.dumps(cfg))
    assert main(["gen-data", "--config", str(path), "--out", str(tmp_path / "d32")]) == 0
    assert Dataset(tmp_path / "d32").frame_shape == (32, 32)
    assert main(["evaluate", "--config", str(path), "--data", str(tmp_path / "d32"),
                 "--checkpoint", str(root / "svfp" / "best.pt"), "--out", str(tmp_path / "e")]) == 1


def test_small_frames_pass_the_rain_filter():
    # 32x32 native frames, 600 sequences of 15 frames, default generator settings
    kept = sum(passes_rain_filter(generate_synthetic_sequence(
        SyntheticConfig(height=32, width=32, length=15, seed=s)).frames[:6]) for s in range(600))
    assert kept > 0


def assert_exit(argv, code):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == code


def test_config_roundtrip(tmp_path):
    cfg = desk_config().resolved((32, 32))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == desk_config()  # an echoed config loads back
    tampered = cfg.to_dict()
    tampered["train"]["seed"] = 99
    path.write_text(json.dumps(tampered))
    with pytest.raises(ConfigurationError):
        load_config(path)
    assert RunConfig.from_dict(json.loads(json.dumps(TINY))).seeds() == {"data": 30_000, "init": 4, "train": 5,
                                                                          "forecast": 6}
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
