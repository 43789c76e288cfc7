"""scikit-learn compatible front end.

The estimator takes the usual ``(n_samples, n_features)`` input and converts
to the column-per-sample layout used internally.
"""

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .affinity import AffinityConfig, build_affinity
from .cluster import spectral_cluster
from .exceptions import ConfigError
from .model import EncoderSpec, Hyperparams
from .trainer import TrainConfig, finetune, pretrain

__all__ = ["RGRL"]

_NORMS = {"l1": 1, "l2": 2}


class RGRL(ClusterMixin, TransformerMixin, BaseEstimator):
    """Relation-guided auto-encoder with spectral clustering of the learned relations.

    Parameters
    ----------
    n_clusters : int
    hidden_layer_sizes : tuple of int
        Hidden widths of the fully connected encoder; the decoder mirrors them.
    latent_dim : int, optional
        Embedding width. Defaults to ``n_clusters``.
    conv_layers : tuple of (kernel_h, kernel_w, channels), optional
        Switches to a convolutional encoder; needs ``sample_shape``.
    sample_shape : tuple (h, w, c), optional
        Shape of one sample; features are the row-major flattening.
    stride : int
        Stride of every convolution.
    alpha, beta, gamma : float
        Weights of the regularizer, latent self-expression and input
        self-expression terms.
    norm : {"l1", "l2"}
        Regularizer on the relation matrix.
    locality : bool
        False replaces the weighted reconstruction by plain reconstruction.
    d_sub : int
        Intrinsic subspace dimension used for the affinity rank ``k*d_sub+1``.
    rho : float
        Elementwise exponent of the affinity.
    pretrain_epochs, finetune_epochs : int
    pretrain_lr, finetune_lr : float
    c_lr : float, optional
        Separate learning rate for the relation matrix.
    pretrain_batch_size : int, optional
        Mini-batch size for pre-training; full batch when None.
    n_init : int
        k-means restarts inside spectral clustering.
    random_state : int

    Attributes
    ----------
    network_ : RGRLNetwork
    relation_matrix_ : ndarray of shape (n_samples, n_samples)
    affinity_matrix_ : ndarray of shape (n_samples, n_samples)
    labels_ : ndarray of shape (n_samples,)
    embedding_ : ndarray of shape (n_samples, latent_dim)
    train_report_ : TrainReport
    """

    def __init__(
        self,
        n_clusters=8,
        hidden_layer_sizes=(500, 500, 2000),
        latent_dim=None,
        conv_layers=None,
        sample_shape=None,
        stride=2,
        alpha=1e-4,
        beta=1.0,
        gamma=1.0,
        norm="l2",
        locality=True,
        d_sub=3,
        rho=1.0,
        pretrain_epochs=50,
        finetune_epochs=30,
        pretrain_lr=1e-3,
        finetune_lr=1e-4,
        c_lr=None,
        pretrain_batch_size=None,
        n_init=20,
        random_state=0,
    ):
        self.n_clusters = n_clusters
        self.hidden_layer_sizes = hidden_layer_sizes
        self.latent_dim = latent_dim
        self.conv_layers = conv_layers
        self.sample_shape = sample_shape
        self.stride = stride
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.norm = norm
        self.locality = locality
        self.d_sub = d_sub
        self.rho = rho
        self.pretrain_epochs = pretrain_epochs
        self.finetune_epochs = finetune_epochs
        self.pretrain_lr = pretrain_lr
        self.finetune_lr = finetune_lr
        self.c_lr = c_lr
        self.pretrain_batch_size = pretrain_batch_size
        self.n_init = n_init
        self.random_state = random_state

    # -- config objects ---------------------------------------------------

    def encoder_spec(self, n_features):
        if self.conv_layers:
            return EncoderSpec(
                "conv", conv_layers=self.conv_layers, sample_shape=self.sample_shape, stride=self.stride
            )
        latent = self.latent_dim or self.n_clusters
        return EncoderSpec("fc", widths=(n_features, *self.hidden_layer_sizes, latent))

    def hyperparams(self):
        if self.norm not in _NORMS:
            raise ConfigError(f"norm must be 'l1' or 'l2', got {self.norm!r}")
        return Hyperparams(self.alpha, self.beta, self.gamma, _NORMS[self.norm], bool(self.locality))

    def train_config(self):
        return TrainConfig(
            pretrain_epochs=self.pretrain_epochs,
            finetune_epochs=self.finetune_epochs,
            pretrain_lr=self.pretrain_lr,
            finetune_lr=self.finetune_lr,
            seed=self.random_state,
            pretrain_batch_size=self.pretrain_batch_size,
            c_lr=self.c_lr,
        )

    def affinity_config(self):
        return AffinityConfig(self.n_clusters, self.d_sub, self.rho)

    # -- estimator API ----------------------------------------------------

    def fit(self, X, y=None, network=None, callback=None):
        """Pre-train, fine-tune and cluster.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored
        network : RGRLNetwork, optional
            A pre-trained network for exactly these samples; pre-training is
            skipped and the network is copied, not modified.
        callback : callable, optional
            ``callback(epoch, network, terms)`` after each fine-tuning step.
        """
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        Xc = X.T
        spec = self.encoder_spec(X.shape[1])
        acfg = self.affinity_config()
        if acfg.rank > X.shape[0]:
            raise ConfigError(f"k * d_sub + 1 = {acfg.rank} exceeds the number of samples {X.shape[0]}")
        hp = self.hyperparams()
        tcfg = self.train_config()
        if network is None:
            net, report = pretrain(spec, Xc, tcfg)
        else:
            if network.n_samples != X.shape[0]:
                raise ConfigError(f"network is bound to {network.n_samples} samples, got {X.shape[0]}")
            net, report = network.copy(), None
        net, report = finetune(net, Xc, hp, tcfg, report, callback=callback)
        self.network_ = net
        self.train_report_ = report
        self.relation_matrix_ = net.C.copy()
        self.affinity_matrix_ = build_affinity(net.C, acfg)
        self.assignment_ = spectral_cluster(
            self.affinity_matrix_, self.n_clusters, seed=self.random_state, restarts=self.n_init
        )
        self.labels_ = self.assignment_.labels
        self.embedding_ = net.encode(Xc).T
        return self

    def transform(self, X):
        """Latent codes of ``X``, shape (n_samples, latent_dim)."""
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.network_.encode(X.T).T

    def predict(self, X):
        """Label new samples by their nearest training sample in latent space."""
        Z = self.transform(X)
        nearest = np.empty(Z.shape[0], dtype=np.int64)
        for start in range(0, Z.shape[0], 1024):
            block = cdist(Z[start:start + 1024], self.embedding_, "sqeuclidean")
            nearest[start:start + 1024] = np.argmin(block, axis=1)
        return self.labels_[nearest]
