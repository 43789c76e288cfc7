"""Subspace clustering with a relation-guided auto-encoder.

The main entry points are :class:`rgrl.RGRL` (scikit-learn estimator) and the
functions in :mod:`rgrl.pipeline`.
"""

from .affinity import AffinityConfig, DegenerateAffinityWarning, build_affinity
from .cluster import ClusterAssignment, kmeans, spectral_cluster
from .data import Dataset, load_dense, make_subspaces
from .estimator import RGRL
from .exceptions import ConfigError, ContractError, DataFormatError, NumericalError, RGRLError, TrainingError
from .metrics import accuracy, evaluate, nmi, purity
from .model import EncoderSpec, Hyperparams, RGRLNetwork, load_checkpoint, save_checkpoint
from .trainer import TrainConfig, TrainReport, finetune, pretrain

__version__ = "0.1.0"

__all__ = [
    "RGRL",
    "AffinityConfig",
    "DegenerateAffinityWarning",
    "build_affinity",
    "ClusterAssignment",
    "kmeans",
    "spectral_cluster",
    "Dataset",
    "load_dense",
    "make_subspaces",
    "ConfigError",
    "ContractError",
    "DataFormatError",
    "NumericalError",
    "RGRLError",
    "TrainingError",
    "accuracy",
    "evaluate",
    "nmi",
    "purity",
    "EncoderSpec",
    "Hyperparams",
    "RGRLNetwork",
    "load_checkpoint",
    "save_checkpoint",
    "TrainConfig",
    "TrainReport",
    "finetune",
    "pretrain",
]
