"""End-to-end runs: full clustering, out-of-sample labelling and beta/gamma sweeps.

A run is described by a :class:`RunConfig`, usually read from JSON::

    {
      "dataset": {"synthetic": {"n_subspaces": 3, "dim": 2, "ambient": 20,
                                "per_subspace": 30, "noise": 0.0, "seed": 0}},
      "encoder": {"hidden_layer_sizes": [32], "latent_dim": 8},
      "hyperparams": {"alpha": 0.1, "beta": 1.0, "gamma": 1.0, "norm": "l1"},
      "train": {"pretrain_epochs": 500, "finetune_epochs": 3000, "finetune_lr": 1e-3},
      "affinity": {"k": 3, "d_sub": 2, "rho": 1.0},
      "seed": 0,
      "out": "runs/synthetic"
    }

A file dataset uses ``{"path": ..., "format": "rgm1"|"csv", "labels": ...,
"sample_shape": [h, w, c], "normalize": true, "subsample": {"per_class": 100}}``.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import data
from .affinity import write_pgm
from .estimator import RGRL
from .exceptions import ConfigError
from .metrics import evaluate
from .model import save_checkpoint
from .trainer import pretrain

__all__ = [
    "RunConfig",
    "OosSplit",
    "synthetic_config",
    "load_dataset",
    "make_estimator",
    "make_split",
    "run_full",
    "run_oos",
    "sweep",
]

logger = logging.getLogger(__name__)

MODES = ("full-pipeline", "oos", "ablation-sc", "sweep")


@dataclass
class RunConfig:
    dataset: dict
    affinity: dict
    encoder: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None
    mode: str = "full-pipeline"
    n_init: int = 20
    oos: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if "k" not in self.affinity:
            raise ConfigError("affinity.k (number of clusters) is required")
        ds = self.dataset
        if "synthetic" not in ds and "path" not in ds:
            raise ConfigError("dataset needs either 'path' or 'synthetic'")
        if "path" in ds:
            for key in ("path", "labels"):
                if ds.get(key) is not None and not Path(ds[key]).exists():
                    raise ConfigError(f"dataset {key} does not exist: {ds[key]}")
        if self.mode == "oos" and not ({"seed_size", "seed_fraction"} & set(self.oos)):
            raise ConfigError("oos mode needs oos.seed_size or oos.seed_fraction")
        if self.mode == "sweep" and not (self.sweep.get("beta") and self.sweep.get("gamma")):
            raise ConfigError("sweep mode needs nonempty sweep.beta and sweep.gamma grids")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        base = Path(path).parent
        ds = d.get("dataset", {})
        for key in ("path", "labels"):
            if ds.get(key) is not None and not Path(ds[key]).is_absolute():
                ds[key] = str(base / ds[key])
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class OosSplit:
    """Indices of the training (seed) samples and of the held-out samples."""

    seed_indices: np.ndarray
    holdout_indices: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.seed_indices, dtype=np.int64)
        h = np.asarray(self.holdout_indices, dtype=np.int64)
        if np.intersect1d(s, h).size:
            raise ConfigError("seed and holdout indices overlap")
        object.__setattr__(self, "seed_indices", s)
        object.__setattr__(self, "holdout_indices", h)

    def check_covers(self, n):
        both = np.union1d(self.seed_indices, self.holdout_indices)
        if both.size != n or both[0] != 0 or both[-1] != n - 1:
            raise ConfigError(f"split does not cover all {n} samples")


def synthetic_config(noise=0.0, seed=0, **overrides):
    """The union-of-subspaces configuration used in the acceptance runs.

    Three 2-dimensional subspaces of R^20 with 30 points each, a 20-32-8
    encoder and an L1 relation regularizer.
    """
    cfg = dict(
        dataset={"synthetic": dict(n_subspaces=3, dim=2, ambient=20, per_subspace=30, noise=noise, seed=seed)},
        encoder={"hidden_layer_sizes": [32], "latent_dim": 8},
        hyperparams={"alpha": 0.1, "beta": 1.0, "gamma": 1.0, "norm": "l1", "locality": True},
        train={"pretrain_epochs": 500, "finetune_epochs": 3000, "pretrain_lr": 1e-3, "finetune_lr": 1e-3},
        affinity={"k": 3, "d_sub": 2, "rho": 1.0},
        seed=seed,
    )
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    return RunConfig.from_dict(cfg)


def load_dataset(spec):
    """Resolve the ``dataset`` section of a config to a :class:`~rgrl.data.Dataset`."""
    if "synthetic" in spec:
        return data.make_subspaces(**spec["synthetic"])
    ds = data.load_dense(
        spec["path"],
        format=spec.get("format"),
        labels=spec.get("labels"),
        sample_shape=spec.get("sample_shape"),
        normalize=spec.get("normalize", False),
    )
    sub = spec.get("subsample")
    if sub:
        ds = data.subsample(ds, per_class=sub.get("per_class"), total=sub.get("total"), seed=sub.get("seed", 0))
    return ds


def make_estimator(cfg, sample_shape=None):
    enc = dict(cfg.encoder)
    hp = dict(cfg.hyperparams)
    if cfg.mode == "ablation-sc":
        hp["locality"] = False
    params = dict(
        n_clusters=cfg.affinity["k"],
        d_sub=cfg.affinity.get("d_sub", 3),
        rho=cfg.affinity.get("rho", 1.0),
        random_state=cfg.seed,
        n_init=cfg.n_init,
    )
    if "conv_layers" in enc:
        enc["conv_layers"] = tuple(tuple(layer) for layer in enc["conv_layers"])
        enc.setdefault("sample_shape", sample_shape)
    if "hidden_layer_sizes" in enc:
        enc["hidden_layer_sizes"] = tuple(enc["hidden_layer_sizes"])
    if enc.get("sample_shape") is not None:
        enc["sample_shape"] = tuple(enc["sample_shape"])
    params.update(enc)
    params.update(hp)
    params.update(cfg.train)
    try:
        return RGRL(**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _score(labels, pred):
    return evaluate(labels, pred) if labels is not None else {}


def _write_artifacts(out, cfg, ds, est, metrics, labels=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.rgck", est.network_, est.hyperparams())
    data.write_matrix(out / "affinity.rgm", est.affinity_matrix_)
    write_pgm(out / "affinity.pgm", est.affinity_matrix_)
    data.write_labels(out / "labels.txt", est.labels_ if labels is None else labels)
    est.train_report_.to_jsonl(out / "train_report.jsonl")
    with open(out / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
    with open(out / "config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
    with open(out / "dataset.json", "w") as fh:
        json.dump({"name": ds.name, "n_samples": ds.n_samples, "n_features": ds.n_features, **ds.meta},
                  fh, indent=2, sort_keys=True)


def run_full(cfg, dataset=None, network=None):
    """Pre-train, fine-tune, build the affinity, cluster and score.

    Returns a metrics dict (``acc``, ``nmi``, ``pur`` when labels exist) and
    writes artifacts to ``cfg.out`` when set.
    """
    ds = dataset if dataset is not None else load_dataset(cfg.dataset)
    est = make_estimator(cfg, ds.sample_shape)
    est.fit(ds.X.T, network=network)
    metrics = _score(ds.labels, est.labels_)
    if cfg.out:
        _write_artifacts(cfg.out, cfg, ds, est, metrics)
    return metrics


def make_split(n, seed_size=None, seed_fraction=None, seed=0):
    """Random seed/holdout split; both index arrays are sorted."""
    if seed_size is None:
        if seed_fraction is None:
            raise ConfigError("give seed_size or seed_fraction")
        seed_size = int(round(seed_fraction * n))
    if not 0 < seed_size <= n:
        raise ConfigError(f"seed set size {seed_size} must be in [1, {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    return OosSplit(np.sort(perm[:seed_size]), np.sort(perm[seed_size:]))


def run_oos(cfg, split=None, dataset=None):
    """Train on the seed samples, then label the rest by 1-NN in latent space.

    Returns a dict with full-dataset metrics at the top level and the
    seed-set and holdout metrics under ``"seed"`` and ``"holdout"``.
    """
    ds = dataset if dataset is not None else load_dataset(cfg.dataset)
    if split is None:
        split = make_split(
            ds.n_samples, cfg.oos.get("seed_size"), cfg.oos.get("seed_fraction"), cfg.oos.get("split_seed", cfg.seed)
        )
    split.check_covers(ds.n_samples)
    est = make_estimator(cfg, ds.sample_shape)
    est.fit(ds.X[:, split.seed_indices].T)
    labels = np.empty(ds.n_samples, dtype=np.int64)
    labels[split.seed_indices] = est.labels_
    if split.holdout_indices.size:
        labels[split.holdout_indices] = est.predict(ds.X[:, split.holdout_indices].T)
    metrics = _score(ds.labels, labels)
    if ds.labels is not None:
        metrics["seed"] = evaluate(ds.labels[split.seed_indices], est.labels_)
        if split.holdout_indices.size:
            metrics["holdout"] = evaluate(ds.labels[split.holdout_indices], labels[split.holdout_indices])
    metrics["n_seed"] = int(split.seed_indices.size)
    metrics["n_holdout"] = int(split.holdout_indices.size)
    if cfg.out:
        _write_artifacts(cfg.out, cfg, ds, est, metrics, labels=labels)
    return metrics


def sweep(cfg, beta_grid=None, gamma_grid=None, dataset=None):
    """Grid search over beta and gamma sharing one pre-trained network.

    Returns a list of row dicts ``{beta, gamma, acc, nmi, pur, best, error}``;
    failed points keep ``error`` and NaN metrics, and exactly one successful
    row (highest ACC, earliest on ties) has ``best=True``.
    """
    beta_grid = list(beta_grid if beta_grid is not None else cfg.sweep.get("beta", []))
    gamma_grid = list(gamma_grid if gamma_grid is not None else cfg.sweep.get("gamma", []))
    if not beta_grid or not gamma_grid:
        raise ConfigError("sweep needs nonempty beta and gamma grids")
    ds = dataset if dataset is not None else load_dataset(cfg.dataset)
    base = make_estimator(cfg, ds.sample_shape)
    net, _ = pretrain(base.encoder_spec(ds.n_features), ds.X, base.train_config())
    rows = []
    for beta in beta_grid:
        for gamma in gamma_grid:
            point = RunConfig.from_dict({**cfg.to_dict(), "out": None,
                                         "hyperparams": {**cfg.hyperparams, "beta": beta, "gamma": gamma}})
            row = {"beta": beta, "gamma": gamma, "acc": math.nan, "nmi": math.nan, "pur": math.nan,
                   "best": False, "error": None}
            try:
                row.update(run_full(point, dataset=ds, network=net))
            except Exception as exc:  # one failed grid point must not stop the sweep
                logger.warning("sweep point beta=%g gamma=%g failed: %s", beta, gamma, exc)
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    scored = [r for r in rows if r["error"] is None and not math.isnan(r["acc"])]
    if scored:
        max(scored, key=lambda r: r["acc"])["best"] = True
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_table(out / "sweep.tsv", rows)
    return rows


def write_sweep_table(path, rows):
    with open(path, "w") as fh:
        fh.write("beta\tgamma\tacc\tnmi\tpur\tbest\terror\n")
        for r in rows:
            fh.write(
                f"{r['beta']:g}\t{r['gamma']:g}\t{r['acc']:.6f}\t{r['nmi']:.6f}\t{r['pur']:.6f}\t"
                f"{'*' if r['best'] else ''}\t{r['error'] or ''}\n"
            )
