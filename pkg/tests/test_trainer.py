import numpy as np
import pytest

from rgrl.data import make_subspaces
from rgrl.exceptions import ConfigError, TrainingError
from rgrl.model import EncoderSpec, Hyperparams, RGRLNetwork
from rgrl.trainer import Adam, TrainConfig, TrainReport, adam_step, finetune, pretrain


def _block_mass(C, labels):
    A = np.abs(C)
    return A[labels[:, None] == labels[None, :]].sum() / A.sum()


def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0])
    adam_step(p, np.zeros(2), np.zeros(2), np.zeros(2), 1, 0.1)
    np.testing.assert_array_equal(p, [1.0, -2.0])


def test_adam_first_step_is_normalized():
    p = np.zeros(3)
    g = np.array([0.5, -2.0, 1e-3])
    adam_step(p, g, np.zeros(3), np.zeros(3), 1, 0.01, eps=1e-8)
    np.testing.assert_allclose(p, -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12)


def test_adam_decreases_quadratic():
    p = {"x": np.array([3.0, -4.0])}
    opt = Adam(0.05)
    start = float(np.sum(p["x"] ** 2))
    for _ in range(100):
        opt.step(p, {"x": 2.0 * p["x"]})
    assert np.sum(p["x"] ** 2) < start


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step(np.zeros(2), np.zeros(3), np.zeros(2), np.zeros(2), 1, 0.1)


def test_adam_lr_override():
    p = {"a": np.zeros(1), "b": np.zeros(1)}
    Adam(0.1, lr_overrides={"b": 0.5}).step(p, {"a": np.ones(1), "b": np.ones(1)})
    assert p["a"][0] == pytest.approx(-0.1) and p["b"][0] == pytest.approx(-0.5)


def test_zero_epochs_keeps_initialization():
    spec = EncoderSpec("fc", widths=(4, 3, 2))
    X = np.random.default_rng(0).standard_normal((4, 6))
    net, report = pretrain(spec, X, TrainConfig(pretrain_epochs=0, seed=5))
    assert net.checksum() == RGRLNetwork(spec, 6, seed=5).checksum()
    assert report.pretrain == []


def test_linear_autoencoder_rank_one_data():
    rng = np.random.default_rng(0)
    X = np.outer(rng.standard_normal(5), rng.standard_normal(20))
    spec = EncoderSpec("fc", widths=(5, 1))
    _, report = pretrain(spec, X, TrainConfig(pretrain_epochs=3000, pretrain_lr=1e-2))
    start, end = report.pretrain[0]["reconstruction"], report.pretrain[-1]["reconstruction"]
    assert end < 1e-6 * start


def test_pretrain_loss_goes_down():
    X = np.random.default_rng(6).standard_normal((8, 40))
    _, report = pretrain(EncoderSpec("fc", widths=(8, 6, 3)), X, TrainConfig(pretrain_epochs=50))
    losses = [r["reconstruction"] for r in report.pretrain]
    assert len(losses) == 50
    assert np.mean(losses[-5:]) <= losses[0]


def test_pretrain_is_deterministic():
    X = np.random.default_rng(1).standard_normal((6, 12))
    spec = EncoderSpec("fc", widths=(6, 4, 2))
    cfg = TrainConfig(pretrain_epochs=20, seed=3, pretrain_batch_size=5)
    a, ra = pretrain(spec, X, cfg)
    b, rb = pretrain(spec, X, cfg)
    assert a.checksum() == b.checksum()
    assert ra.pretrain == rb.pretrain


def test_finetune_one_step_per_epoch_and_diag_zero():
    X = np.random.default_rng(2).standard_normal((5, 8))
    net = RGRLNetwork(EncoderSpec("fc", widths=(5, 3)), 8)
    seen = []
    finetune(net, X, Hyperparams(), TrainConfig(finetune_epochs=7),
             callback=lambda epoch, n, terms: seen.append((epoch, float(np.abs(np.diag(n.C)).max()))))
    assert [e for e, _ in seen] == list(range(7))
    assert all(d == 0.0 for _, d in seen)


def test_huge_alpha_drives_relation_to_zero():
    X = np.random.default_rng(3).standard_normal((5, 10))
    net = RGRLNetwork(EncoderSpec("fc", widths=(5, 3)), 10, c_init_scale=0.05)
    hp = Hyperparams(alpha=1e6, beta=0.0, gamma=0.0, norm_p=2)
    finetune(net, X, hp, TrainConfig(finetune_epochs=2000, finetune_lr=1e-4))
    assert np.abs(net.C).max() < 1e-3


def test_reconstruction_only_reduces_to_pretraining():
    # duplicated samples with C swapping the copies give ZC = Z, so the
    # objective is the plain reconstruction loss
    rng = np.random.default_rng(4)
    half = rng.standard_normal((4, 5))
    X = np.hstack([half, half])
    spec = EncoderSpec("fc", widths=(4, 3, 2))
    cfg = TrainConfig(pretrain_epochs=25, finetune_epochs=25, pretrain_lr=1e-3, finetune_lr=1e-3, c_lr=1e-300)
    ref, ref_report = pretrain(spec, X, cfg)
    net = RGRLNetwork(spec, 10)
    net.C[...] = np.roll(np.eye(10), 5, axis=1)
    hp = Hyperparams(alpha=0.0, beta=0.0, gamma=0.0, locality=False)
    _, report = finetune(net, X, hp, cfg)
    expected = [r["reconstruction"] for r in ref_report.pretrain]
    got = [r["total"] for r in report.finetune]
    np.testing.assert_allclose(got, expected, rtol=1e-8)


def test_finetune_concentrates_mass_in_blocks():
    ds = make_subspaces(3, 2, 20, 30, seed=0)
    spec = EncoderSpec("fc", widths=(20, 32, 8))
    cfg = TrainConfig(pretrain_epochs=200, finetune_epochs=300, finetune_lr=1e-3)
    net, _ = pretrain(spec, ds.X, cfg)
    before = _block_mass(net.C, ds.labels)
    finetune(net, ds.X, Hyperparams(alpha=0.1, norm_p=1), cfg)
    assert _block_mass(net.C, ds.labels) > before + 0.2


def test_divergence_names_stage_and_epoch():
    X = np.full((3, 4), 1e200)
    with pytest.raises(TrainingError, match="pretrain diverged at epoch 0") as info:
        pretrain(EncoderSpec("fc", widths=(3, 2)), X, TrainConfig(pretrain_epochs=3))
    assert info.value.stage == "pretrain" and info.value.epoch == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(finetune_lr=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(pretrain_epochs=-1)


def test_report_jsonl_round_trip(tmp_path):
    X = np.random.default_rng(2).standard_normal((5, 8))
    net, report = pretrain(EncoderSpec("fc", widths=(5, 3)), X, TrainConfig(pretrain_epochs=3, finetune_epochs=2))
    finetune(net, X, Hyperparams(), TrainConfig(finetune_epochs=2), report)
    report.to_jsonl(tmp_path / "r.jsonl")
    back = TrainReport.from_jsonl(tmp_path / "r.jsonl")
    assert back.pretrain == report.pretrain and back.finetune == report.finetune
    assert back.checksum == report.checksum
