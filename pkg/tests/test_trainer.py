import json

import numpy as np
import pytest
import torch
from conftest import random_windows, tiny_baseline_config, tiny_model_config

from svfp_nowcast.baseline import ConvLSTMBaseline
from svfp_nowcast.errors import CheckpointError, ConfigurationError, NumericalError, ShapeError
from svfp_nowcast.model import SVFPModel
from svfp_nowcast.trainer import (
    EarlyStopping,
    TrainConfig,
    Trainer,
    build_model,
    fit,
    load_checkpoint,
    save_checkpoint,
    split_validation,
    zeros_predictor_loss,
)


@pytest.fixture
def windows():
    return random_windows(np.random.default_rng(0), 20, 3, 16, 16)


def _cfg(**kw):
    base = dict(batch_size=4, max_epochs=3, patience=10, seed=5)
    base.update(kw)
    return TrainConfig(**base)


def test_early_stopping_counter():
    es = EarlyStopping(patience=2)
    assert not es.update(1, 5.0)
    assert not es.update(2, 4.0)
    assert not es.update(3, 4.0)  # ties do not count as improvement
    assert es.update(4, 4.5)
    assert es.best_epoch == 2 and es.best == 4.0
    es2 = EarlyStopping(2)
    es2.load_state_dict(es.state_dict())
    assert es2.state_dict() == es.state_dict()


def test_fit_stops_after_patience(monkeypatch, windows):
    losses = iter([3.0, 2.0, 2.5, 2.6, 1.0])

    def fake_evaluate(self, frames, noise=None, order=None):
        v = next(losses)
        return {"reconstruction": v, "kl": 0.0, "total": v}

    monkeypatch.setattr(Trainer, "evaluate", fake_evaluate)
    model = SVFPModel(tiny_model_config(), seed=0)
    _, metrics = fit(model, windows, _cfg(patience=1, max_epochs=10))
    assert [m.epoch for m in metrics] == [1, 2, 3]


def test_max_epochs_respected(windows):
    _, metrics = fit(SVFPModel(tiny_model_config(), 0), windows, _cfg(), max_epochs=1)
    assert len(metrics) == 1


def test_validation_split():
    train, val = split_validation(100, 0.1, 3)
    assert len(val) == 10 and len(train) == 90
    assert not set(train) & set(val) and set(train) | set(val) == set(range(100))
    again = split_validation(100, 0.1, 3)
    np.testing.assert_array_equal(val, again[1])
    assert not np.array_equal(val, split_validation(100, 0.1, 4)[1])
    assert len(split_validation(5, 0.1, 0)[1]) == 1


def test_training_is_deterministic(windows, tmp_path):
    runs = []
    for k in range(2):
        model = SVFPModel(tiny_model_config(), 1)
        _, metrics = fit(model, windows, _cfg(max_epochs=2), log_path=tmp_path / f"m{k}.jsonl")
        runs.append((metrics, model.state_dict()))
    assert [m.record() for m in runs[0][0]] == [m.record() for m in runs[1][0]]
    assert all(torch.equal(runs[0][1][k], runs[1][1][k]) for k in runs[0][1])
    assert (tmp_path / "m0.jsonl").read_text() == (tmp_path / "m1.jsonl").read_text()
    assert "wall_time" not in (tmp_path / "m0.jsonl").read_text()
    assert len((tmp_path / "m0.timing.jsonl").read_text().splitlines()) == 2


def test_validation_loss_ignores_batch_order(windows):
    trainer = Trainer(SVFPModel(tiny_model_config(), 0), _cfg(batch_size=3))
    noise = trainer.fixed_noise(windows)
    a = trainer.evaluate(windows, noise)
    b = trainer.evaluate(windows, noise, order=np.random.default_rng(1).permutation(len(windows)))
    assert a["total"] == pytest.approx(b["total"], rel=1e-6)


def test_checkpoint_roundtrip(windows, tmp_path):
    model = SVFPModel(tiny_model_config(), 2)
    fit(model, windows, _cfg(max_epochs=1), checkpoint_dir=tmp_path)
    loaded, payload = load_checkpoint(tmp_path / "best.pt")
    assert payload["kind"] == "svfp" and payload["epoch"] == 1
    assert all(torch.equal(v, loaded.state_dict()[k]) for k, v in model.state_dict().items())


def test_resume_matches_uninterrupted_run(windows, tmp_path):
    full = SVFPModel(tiny_model_config(), 3)
    _, m_full = fit(full, windows, _cfg(max_epochs=3), checkpoint_dir=tmp_path / "a")
    part = SVFPModel(tiny_model_config(), 3)
    fit(part, windows, _cfg(max_epochs=3), checkpoint_dir=tmp_path / "b", max_epochs=2)
    resumed = SVFPModel(tiny_model_config(), 3)
    _, m_res = fit(resumed, windows, _cfg(max_epochs=3), checkpoint_dir=tmp_path / "b",
                   resume_from=tmp_path / "b" / "last.pt")
    assert [m.record() for m in m_full] == [m.record() for m in m_res]
    last_a = torch.load(tmp_path / "a" / "last.pt", weights_only=False)["model_state"]
    last_b = torch.load(tmp_path / "b" / "last.pt", weights_only=False)["model_state"]
    assert all(torch.equal(last_a[k], last_b[k]) for k in last_a)


def test_checkpoint_config_mismatch(windows, tmp_path):
    fit(SVFPModel(tiny_model_config(), 0), windows, _cfg(max_epochs=1), checkpoint_dir=tmp_path)
    with pytest.raises(ShapeError):
        load_checkpoint(tmp_path / "best.pt", SVFPModel(tiny_model_config(latent_dim=4), 0))
    with pytest.raises(ShapeError):
        load_checkpoint(tmp_path / "best.pt", ConvLSTMBaseline(tiny_baseline_config(16, 16), 0))


def test_bad_checkpoint_files(tmp_path):
    (tmp_path / "junk.pt").write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "junk.pt")
    save_checkpoint(tmp_path / "other.pt", {"format": "something-else"})
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "other.pt")


def test_non_finite_loss_raises(windows):
    bad = windows.copy()
    bad[0, 0, 0, 0] = np.nan
    trainer = Trainer(SVFPModel(tiny_model_config(), 0), _cfg())
    with pytest.raises(NumericalError):
        trainer.train_step(torch.as_tensor(bad[:4]))


def test_training_reduces_loss_on_copy_task():
    # a static scene repeated over time: the next frame equals the last one
    rng = np.random.default_rng(0)
    frames = np.repeat(random_windows(rng, 24, 1, 8, 8), 4, axis=1)
    model = ConvLSTMBaseline(tiny_baseline_config(8, 8, filters=8), 0)
    _, metrics = fit(model, frames, _cfg(max_epochs=40, batch_size=8, learning_rate=1e-2))
    assert metrics[-1].val_total < 0.5 * metrics[0].val_total
    assert metrics[-1].val_total < zeros_predictor_loss(model, frames)


def test_zeros_predictor_loss():
    frames = np.ones((2, 3, 4, 4))
    assert zeros_predictor_loss(SVFPModel(tiny_model_config(4 * 4, 4 * 4), 0), np.ones((2, 3, 16, 16))) == 3 * 256
    assert zeros_predictor_loss(ConvLSTMBaseline(tiny_baseline_config(4, 4), 0), frames) == 2 * 16


def test_build_model_and_config_errors(windows):
    assert build_model("svfp", tiny_model_config().to_dict()).kind == "svfp"
    with pytest.raises(ConfigurationError):
        build_model("gan", {})
    with pytest.raises(ConfigurationError):
        fit(SVFPModel(tiny_model_config(), 0), windows[:1], _cfg())
    with pytest.raises(ConfigurationError):
        TrainConfig(batch_size=0)


def test_metrics_record_is_json(windows):
    _, metrics = fit(ConvLSTMBaseline(tiny_baseline_config(16, 16), 0), windows, _cfg(max_epochs=1))
    rec = json.loads(json.dumps(metrics[0].record()))
    assert set(rec) >= {"epoch", "train_total", "val_total"} and rec["val_kl"] == 0.0
