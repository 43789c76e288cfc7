"""The relation-guided auto-encoder and its training objective.

The network is encoder -> self-expression layer -> decoder. The self-expression
layer is a bias-free ``n x n`` linear map ``C`` acting across samples, so
``Z C`` replaces every latent code by a combination of the others. ``C`` has a
zero diagonal at all times.

Objective for column-per-sample ``X`` (d, n)::

    ||X - Xhat||^2 + 2 sum_ij Ln_ij x_i.xhat_j          locality
    + alpha * R_p(C)                                     regularizer
    + beta/2 ||Z - Z C||^2 + gamma/2 ||X - X C||^2       self-expression

``Ln`` is the normalized Laplacian of ``S = (|C| + |C|^T)/2`` and is treated as
a constant at each evaluation (no gradient flows through it into ``C``).
"""

import hashlib
import json
import struct
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

from . import data as _data
from .exceptions import ConfigError, ContractError, DataFormatError
from .graph import locality_grad, locality_loss, similarity_from_relation
from .layers import Conv2d, ConvTranspose2d, Dense, ReLU, conv_output_size
from .numerics import make_rng

__all__ = [
    "EncoderSpec",
    "Hyperparams",
    "RGRLNetwork",
    "forward",
    "regularizer",
    "regularizer_grad",
    "enforce_diag_zero",
    "total_loss",
    "loss_and_grads",
    "reconstruction_loss_and_grads",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture of the encoder; the decoder mirrors it.

    For ``kind="fc"`` give ``widths`` from input to embedding, e.g.
    ``(784, 500, 500, 2000, 10)``. For ``kind="conv"`` give ``sample_shape``
    ``(h, w, c)`` and ``conv_layers`` as ``(kernel_h, kernel_w, channels)``
    triples; every convolution has stride ``stride`` and ``same`` padding.
    ReLU follows every layer except the embedding and the output layer.
    """

    kind: str = "fc"
    widths: tuple = ()
    conv_layers: tuple = ()
    sample_shape: tuple = None
    stride: int = 2

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(
            self, "conv_layers", tuple(tuple(int(v) for v in layer) for layer in self.conv_layers)
        )
        if self.sample_shape is not None:
            object.__setattr__(self, "sample_shape", tuple(int(s) for s in self.sample_shape))
        if self.kind == "fc":
            if len(self.widths) < 2 or min(self.widths) < 1:
                raise ConfigError("fc encoder needs at least input and embedding widths")
        elif self.kind == "conv":
            if not self.conv_layers or self.sample_shape is None or len(self.sample_shape) != 3:
                raise ConfigError("conv encoder needs conv_layers and a (h, w, c) sample_shape")
            if any(len(layer) != 3 for layer in self.conv_layers):
                raise ConfigError("conv layers are (kernel_h, kernel_w, channels) triples")
            if self.stride < 1:
                raise ConfigError("stride must be positive")
        else:
            raise ConfigError(f"unknown encoder kind {self.kind!r}")

    @property
    def input_dim(self):
        if self.kind == "fc":
            return self.widths[0]
        h, w, c = self.sample_shape
        return h * w * c

    def spatial_sizes(self):
        """Spatial size at the input of each conv layer, then the embedding."""
        h, w, _ = self.sample_shape
        sizes = [(h, w)]
        for _ in self.conv_layers:
            h, w = conv_output_size(h, self.stride), conv_output_size(w, self.stride)
            sizes.append((h, w))
        return sizes

    @property
    def latent_dim(self):
        if self.kind == "fc":
            return self.widths[-1]
        h, w = self.spatial_sizes()[-1]
        return h * w * self.conv_layers[-1][2]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class Hyperparams:
    """Loss weights. ``locality=False`` zeroes the Laplacian (the sc ablation)."""

    alpha: float = 1e-4
    beta: float = 1.0
    gamma: float = 1.0
    norm_p: int = 2
    locality: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError("alpha, beta and gamma must be nonnegative")
        if self.norm_p not in (1, 2):
            raise ConfigError(f"norm_p must be 1 or 2, got {self.norm_p}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def enforce_diag_zero(C):
    """Zero the diagonal of ``C`` in place and return it."""
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ContractError(f"C must be square, got {np.shape(C)}")
    np.fill_diagonal(C, 0.0)
    return C


def regularizer(C, norm_p):
    """``sum |C_ij|`` for p=1, ``sum C_ij^2`` for p=2."""
    if norm_p == 1:
        return float(np.sum(np.abs(C)))
    if norm_p == 2:
        return float(np.sum(C * C))
    raise ConfigError(f"norm_p must be 1 or 2, got {norm_p}")


def regularizer_grad(C, norm_p):
    # sign(0) = 0 is the subgradient used at the kink
    return np.sign(C) if norm_p == 1 else 2.0 * C


class RGRLNetwork:
    """Encoder, self-expression matrix ``C`` and mirrored decoder.

    Parameters
    ----------
    spec : EncoderSpec
    n_samples : int
        Size of ``C``; every forward pass must see exactly this many samples.
    seed : int
        Seeds weight and ``C`` initialization.
    c_init_scale : float
        ``C`` starts uniform in ``[-c_init_scale, c_init_scale]``.
    """

    def __init__(self, spec, n_samples, seed=0, c_init_scale=1e-4):
        self.spec = spec
        self.n_samples = int(n_samples)
        rng = make_rng(seed)
        self.encoder, self.decoder = self._build(spec, rng)
        C = rng.uniform(-c_init_scale, c_init_scale, size=(self.n_samples, self.n_samples))
        self.C = enforce_diag_zero(C)
        self._zc = None

    @staticmethod
    def _build(spec, rng):
        encoder, decoder = [], []
        if spec.kind == "fc":
            w = spec.widths
            for i in range(len(w) - 1):
                encoder.append(Dense(w[i], w[i + 1], rng))
                if i < len(w) - 2:
                    encoder.append(ReLU())
            rev = w[::-1]
            for i in range(len(rev) - 1):
                decoder.append(Dense(rev[i], rev[i + 1], rng))
                if i < len(rev) - 2:
                    decoder.append(ReLU())
        else:
            sizes = spec.spatial_sizes()
            channels = [spec.sample_shape[2]] + [layer[2] for layer in spec.conv_layers]
            L = len(spec.conv_layers)
            for i, (kh, kw, c) in enumerate(spec.conv_layers):
                encoder.append(Conv2d(channels[i], c, (kh, kw), spec.stride, rng))
                if i < L - 1:
                    encoder.append(ReLU())
            for j, i in enumerate(reversed(range(L))):
                kh, kw, _ = spec.conv_layers[i]
                decoder.append(
                    ConvTranspose2d(channels[i + 1], channels[i], (kh, kw), spec.stride, sizes[i], rng)
                )
                if j < L - 1:
                    decoder.append(ReLU())
        return encoder, decoder

    # -- parameters -------------------------------------------------------

    def _named(self, prefix, layers):
        for i, layer in enumerate(layers):
            for k, v in layer.params.items():
                yield f"{prefix}.{i}.{k}", layer, k, v

    def parameters(self, include_c=True):
        """Ordered mapping of parameter name to array (live references)."""
        out = OrderedDict()
        for name, _, _, v in self._named("encoder", self.encoder):
            out[name] = v
        if include_c:
            out["C"] = self.C
        for name, _, _, v in self._named("decoder", self.decoder):
            out[name] = v
        return out

    def gradients(self, include_c=True, grad_c=None):
        out = OrderedDict()
        for name, layer, k, _ in self._named("encoder", self.encoder):
            out[name] = layer.grads[k]
        if include_c:
            out["C"] = grad_c
        for name, layer, k, _ in self._named("decoder", self.decoder):
            out[name] = layer.grads[k]
        return out

    def set_parameters(self, values):
        """Copy arrays into the live parameters (shapes must match)."""
        params = self.parameters()
        for name, v in values.items():
            if name not in params:
                raise ContractError(f"unknown parameter {name!r}")
            target = params[name]
            v = np.asarray(v, dtype=np.float64)
            if v.shape != target.shape:
                raise ContractError(f"{name}: shape {v.shape} != {target.shape}")
            target[...] = v

    def copy(self):
        other = object.__new__(RGRLNetwork)
        other.spec = self.spec
        other.n_samples = self.n_samples
        other.encoder, other.decoder = self._build(self.spec, np.random.default_rng(0))
        other.C = self.C.copy()
        other._zc = None
        other.set_parameters({k: v for k, v in self.parameters().items() if k != "C"})
        return other

    def checksum(self):
        h = hashlib.sha256()
        for name, v in self.parameters().items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(v, dtype="<f8").tobytes())
        return h.hexdigest()

    # -- passes -----------------------------------------------------------

    def _to_maps(self, M, hw, channels):
        return M.T.reshape(M.shape[1], hw[0], hw[1], channels)

    @staticmethod
    def _to_columns(T):
        return T.reshape(T.shape[0], -1).T

    def encode(self, X):
        """Latent codes ``Z`` (latent_dim, n) for any number of samples."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.spec.input_dim:
            raise ContractError(f"expected {self.spec.input_dim} features, got {X.shape[0]}")
        if self.spec.kind == "fc":
            h = X
            for layer in self.encoder:
                h = layer.forward(h)
            return h
        hgt, wid, ch = self.spec.sample_shape
        h = self._to_maps(X, (hgt, wid), ch)
        for layer in self.encoder:
            h = layer.forward(h)
        return self._to_columns(h)

    def decode(self, H):
        if self.spec.kind == "fc":
            h = H
            for layer in self.decoder:
                h = layer.forward(h)
            return h
        hw = self.spec.spatial_sizes()[-1]
        h = self._to_maps(H, hw, self.spec.conv_layers[-1][2])
        for layer in self.decoder:
            h = layer.forward(h)
        return self._to_columns(h)

    def encode_backward(self, gZ):
        if self.spec.kind == "fc":
            g = gZ
            for layer in reversed(self.encoder):
                g = layer.backward(g)
            return g
        hw = self.spec.spatial_sizes()[-1]
        g = self._to_maps(gZ, hw, self.spec.conv_layers[-1][2])
        for layer in reversed(self.encoder):
            g = layer.backward(g)
        return self._to_columns(g)

    def decode_backward(self, gX):
        if self.spec.kind == "fc":
            g = gX
            for layer in reversed(self.decoder):
                g = layer.backward(g)
            return g
        hgt, wid, ch = self.spec.sample_shape
        g = self._to_maps(gX, (hgt, wid), ch)
        for layer in reversed(self.decoder):
            g = layer.backward(g)
        return self._to_columns(g)


def _check_batch(net, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.n_samples:
        raise ContractError(
            f"the self-expression layer is bound to {net.n_samples} samples, "
            f"got a batch of shape {X.shape}"
        )
    return X


def forward(net, X):
    """Full pass: ``Z = F(X)``, ``ZC = Z @ C``, ``Xhat = G(ZC)``."""
    X = _check_batch(net, X)
    Z = net.encode(X)
    ZC = Z @ net.C
    Xhat = net.decode(ZC)
    return Z, ZC, Xhat


def _laplacian_for(net, hp, laplacian):
    if laplacian is not None:
        return np.asarray(laplacian, dtype=np.float64)
    if not hp.locality:
        return np.zeros((net.n_samples, net.n_samples))
    return similarity_from_relation(net.C).L_norm


def _terms(X, Z, ZC, Xhat, C, Ln, hp):
    R_z = Z - ZC
    R_x = X - X @ C
    terms = OrderedDict(
        locality=locality_loss(X, Xhat, Ln),
        regularizer=hp.alpha * regularizer(C, hp.norm_p),
        latent_self_expression=0.5 * hp.beta * float(np.sum(R_z * R_z)),
        input_self_expression=0.5 * hp.gamma * float(np.sum(R_x * R_x)),
    )
    return terms, R_z, R_x


def total_loss(net, X, hp, laplacian=None):
    """Objective value and its per-term breakdown.

    ``laplacian`` overrides the normalized Laplacian (otherwise rebuilt from
    the current ``C``, or zero when ``hp.locality`` is False).
    """
    X = _check_batch(net, X)
    if np.any(np.diag(net.C) != 0):
        raise ContractError("C must have a zero diagonal")
    Ln = _laplacian_for(net, hp, laplacian)
    Z, ZC, Xhat = forward(net, X)
    terms, _, _ = _terms(X, Z, ZC, Xhat, net.C, Ln, hp)
    return sum(terms.values()), terms


def loss_and_grads(net, X, hp, laplacian=None):
    """Objective, term breakdown and gradients for every parameter.

    The gradient for ``C`` has its diagonal zeroed; the Laplacian is held fixed.
    """
    X = _check_batch(net, X)
    C = net.C
    Ln = _laplacian_for(net, hp, laplacian)
    Z, ZC, Xhat = forward(net, X)
    terms, R_z, R_x = _terms(X, Z, ZC, Xhat, C, Ln, hp)

    g_xhat = locality_grad(X, Xhat, Ln)
    g_zc = net.decode_backward(g_xhat)
    # ZC depends on Z and C; the beta term depends on them directly too
    g_z = g_zc @ C.T + hp.beta * (R_z - R_z @ C.T)
    g_c = Z.T @ g_zc - hp.beta * (Z.T @ R_z) - hp.gamma * (X.T @ R_x)
    g_c += hp.alpha * regularizer_grad(C, hp.norm_p)
    np.fill_diagonal(g_c, 0.0)
    net.encode_backward(g_z)
    return sum(terms.values()), terms, net.gradients(grad_c=g_c)


def reconstruction_loss_and_grads(net, X):
    """Plain auto-encoder loss ``sum_i ||x_i - G(F(x_i))||^2`` (no ``C``).

    Works for any number of samples, so it supports mini-batches.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = net.encode(X)
    Xhat = net.decode(Z)
    R = X - Xhat
    net.encode_backward(net.decode_backward(-2.0 * R))
    return float(np.sum(R * R)), net.gradients(include_c=False)


# -- checkpoints --------------------------------------------------------------

CHECKPOINT_MAGIC = b"RGCK"
CHECKPOINT_VERSION = 1
_CK_HEAD = struct.Struct("<4sII")


def save_checkpoint(path, net, hp=None):
    """Write a versioned checkpoint.

    Layout: ``b"RGCK" | u32 version | u32 header_len | JSON header`` followed by
    one binary matrix block per tensor (tensors with more than two axes are
    stored as ``shape[0] x prod(shape[1:])``; 1-D tensors as one row).
    """
    params = net.parameters()
    header = {
        "encoder": net.spec.to_dict(),
        "hyperparams": None if hp is None else hp.to_dict(),
        "n_samples": net.n_samples,
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_CK_HEAD.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for v in params.values():
            flat = v.reshape(1, -1) if v.ndim == 1 else v.reshape(v.shape[0], -1)
            _data.write_matrix_to(fh, flat)


def load_checkpoint(path):
    """Return ``(network, hyperparams_or_None)`` from :func:`save_checkpoint` output."""
    with open(path, "rb") as fh:
        head = fh.read(_CK_HEAD.size)
        if len(head) != _CK_HEAD.size:
            raise DataFormatError(f"{path}: truncated checkpoint header")
        magic, version, hlen = _CK_HEAD.unpack(head)
        if magic != CHECKPOINT_MAGIC:
            raise DataFormatError(f"{path}: not a checkpoint (magic {magic!r})")
        if version != CHECKPOINT_VERSION:
            raise DataFormatError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode())
        spec = EncoderSpec.from_dict(header["encoder"])
        net = RGRLNetwork(spec, header["n_samples"], seed=0)
        values = {}
        for t in header["tensors"]:
            values[t["name"]] = _data.read_matrix_from(fh).reshape(t["shape"])
    net.set_parameters(values)
    hp = None if header["hyperparams"] is None else Hyperparams.from_dict(header["hyperparams"])
    return net, hp
