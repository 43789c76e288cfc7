"""Two-stage training: auto-encoder pre-training, then full-batch fine-tuning."""

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ConfigError, TrainingError
from .model import (
    RGRLNetwork,
    enforce_diag_zero,
    loss_and_grads,
    reconstruction_loss_and_grads,
)
from .numerics import make_rng

__all__ = ["TrainConfig", "TrainReport", "Adam", "adam_step", "pretrain", "finetune"]

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    pretrain_epochs: int = 50
    finetune_epochs: int = 30
    pretrain_lr: float = 1e-3
    finetune_lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    pretrain_batch_size: int = None
    # C often needs a larger step than the network weights at desk scale
    c_lr: float = None

    def __post_init__(self):
        if self.pretrain_lr <= 0 or self.finetune_lr <= 0 or (self.c_lr is not None and self.c_lr <= 0):
            raise ConfigError("learning rates must be positive")
        if self.pretrain_epochs < 0 or self.finetune_epochs < 0:
            raise ConfigError("epoch counts must be nonnegative")
        if self.pretrain_batch_size is not None and self.pretrain_batch_size < 1:
            raise ConfigError("pretrain_batch_size must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class TrainReport:
    """Per-epoch loss terms and timing for both stages."""

    pretrain: list = field(default_factory=list)
    finetune: list = field(default_factory=list)
    seconds: dict = field(default_factory=dict)
    checksum: str = ""

    def records(self):
        for stage in ("pretrain", "finetune"):
            for epoch, terms in enumerate(getattr(self, stage)):
                yield {"stage": stage, "epoch": epoch, **terms}

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")
            fh.write(json.dumps({"seconds": self.seconds, "checksum": self.checksum}) + "\n")

    @classmethod
    def from_jsonl(cls, path):
        report = cls()
        with open(path) as fh:
            for line in fh:
                rec = json.loads(line)
                if "stage" in rec:
                    stage = rec.pop("stage")
                    rec.pop("epoch")
                    getattr(report, stage).append(rec)
                else:
                    report.seconds = rec["seconds"]
                    report.checksum = rec["checksum"]
        return report


class Adam:
    """Adam with bias-corrected moments over a dict of parameter arrays."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8, lr_overrides=None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.lr_overrides = lr_overrides or {}
        self.state = {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for name, p in params.items():
            m, v = self.state.get(name, (None, None))
            if m is None:
                m, v = np.zeros_like(p), np.zeros_like(p)
                self.state[name] = (m, v)
            adam_step(p, grads[name], m, v, self.t, self.lr_overrides.get(name, self.lr),
                      self.beta1, self.beta2, self.eps)


def adam_step(p, g, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update of ``p`` with moment buffers ``m`` and ``v``."""
    if not (p.shape == g.shape == m.shape == v.shape):
        raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}, state {m.shape}/{v.shape}")
    m *= beta1
    m += (1 - beta1) * g
    v *= beta2
    v += (1 - beta2) * (g * g)
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _check(stage, epoch, value):
    if not np.isfinite(value):
        raise TrainingError(stage, epoch)


def pretrain(spec, X, cfg, net=None, report=None):
    """Fit the auto-encoder alone; ``C`` is left at its initial value.

    Parameters
    ----------
    spec : EncoderSpec
    X : ndarray of shape (d, n)
    cfg : TrainConfig
    net : RGRLNetwork, optional
        Continue from an existing network instead of a fresh one.

    Returns
    -------
    net : RGRLNetwork
    report : TrainReport
    """
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    if net is None:
        net = RGRLNetwork(spec, X.shape[1], seed=cfg.seed)
    report = report or TrainReport()
    opt = Adam(cfg.pretrain_lr, cfg.beta1, cfg.beta2, cfg.eps)
    n = X.shape[1]
    batch = cfg.pretrain_batch_size or n
    shuffle = make_rng([cfg.seed, 1])
    t0 = time.perf_counter()
    # overflow shows up as a non-finite loss, which _check reports
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.pretrain_epochs):
            order = np.arange(n) if batch >= n else shuffle.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                value, grads = reconstruction_loss_and_grads(net, X[:, idx] if batch < n else X)
                _check("pretrain", epoch, value)
                opt.step(net.parameters(include_c=False), grads)
                total += value
            report.pretrain.append({"reconstruction": total})
            logger.debug("pretrain epoch %d: %.6g", epoch, total)
    report.seconds["pretrain"] = time.perf_counter() - t0
    report.checksum = net.checksum()
    return net, report


def finetune(net, X, hp, cfg, report=None, callback=None):
    """Optimize the full objective over encoder, ``C`` and decoder.

    Every epoch is a single full-batch Adam step. The Laplacian is rebuilt from
    the current ``C`` before each step and the diagonal of ``C`` is reset to
    zero after it.

    ``callback(epoch, net, terms)`` runs after each step.
    """
    X = np.asarray(X, dtype=np.float64)
    report = report or TrainReport()
    overrides = {"C": cfg.c_lr} if cfg.c_lr is not None else None
    opt = Adam(cfg.finetune_lr, cfg.beta1, cfg.beta2, cfg.eps, overrides)
    t0 = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.finetune_epochs):
            value, terms, grads = loss_and_grads(net, X, hp)
            _check("finetune", epoch, value)
            opt.step(net.parameters(), grads)
            enforce_diag_zero(net.C)
            report.finetune.append({**terms, "total": value})
            if callback is not None:
                callback(epoch, net, terms)
            logger.debug("finetune epoch %d: %.6g", epoch, value)
    report.seconds["finetune"] = time.perf_counter() - t0
    report.checksum = net.checksum()
    return net, report
