"""Two-layer MLP with dropout before the output layer, trained by plain SGD.

Hidden units use a rectifier; dropout is inverted (kept units are scaled by
``1 / (1 - p)``) so the training pass and the MC sampling pass are the same
code. The loss is the mean over a batch of

    -log p(y | x) - beta * H(p(. | x))

where H is the (unnormalized) Shannon entropy; ``beta > 0`` is the
confidence penalty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dropcal.errors import DomainError, InvalidInputError, SchemaError, TrainingDivergedError
from dropcal.prob_core import LogitSampleSet

CHECKPOINT_FORMAT_VERSION = 1
PARAM_NAMES = ("w1", "b1", "w2", "b2")


@dataclass
class ToyNet:
    w1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (C, H)
    b2: np.ndarray  # (C,)
    dropout_p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.dropout_p < 1.0:
            raise DomainError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        for name in PARAM_NAMES:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} has non-finite entries")
            setattr(self, name, arr)
        h, d = self.w1.shape
        c = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (c, h) or self.b2.shape != (c,):
            raise InvalidInputError("inconsistent ToyNet weight shapes")

    @classmethod
    def init(cls, n_inputs=2, n_hidden=32, n_classes=3, dropout_p=0.5, seed=0) -> "ToyNet":
        """He-initialized network with zero biases."""
        rng = np.random.default_rng(seed)
        return cls(
            w1=rng.normal(0.0, math.sqrt(2.0 / n_inputs), size=(n_hidden, n_inputs)),
            b1=np.zeros(n_hidden),
            w2=rng.normal(0.0, math.sqrt(2.0 / n_hidden), size=(n_classes, n_hidden)),
            b2=np.zeros(n_classes),
            dropout_p=dropout_p,
        )

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ToyNet":
        return ToyNet(*(getattr(self, n).copy() for n in PARAM_NAMES), dropout_p=self.dropout_p)


def dropout_mask(shape, p, rng) -> np.ndarray:
    """Inverted-dropout mask: ``1/(1-p)`` with probability ``1-p``, else 0."""
    if p == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def forward(net: ToyNet, x, mask=None):
    """Batch forward pass; returns (logits, cache). ``mask=None`` means no dropout."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    pre = x @ net.w1.T + net.b1
    hidden = np.maximum(pre, 0.0)
    dropped = hidden if mask is None else hidden * mask
    logits = dropped @ net.w2.T + net.b2
    return logits, (x, pre, dropped, mask)


def forward_stochastic(net: ToyNet, x, rng=None, mask=None) -> np.ndarray:
    """One stochastic pass for a single input; returns a length-C logit vector.

    ``rng`` is a :class:`numpy.random.Generator` or a seed. A caller-supplied
    ``mask`` overrides sampling.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_inputs,) or not np.all(np.isfinite(x)):
        raise InvalidInputError(f"expected a finite input of length {net.n_inputs}")
    if mask is None:
        mask = dropout_mask((1, net.n_hidden), net.dropout_p, np.random.default_rng(rng))
    return forward(net, x, np.asarray(mask, dtype=np.float64).reshape(1, -1))[0][0]


def mc_logits(net: ToyNet, x, n_passes: int = 25, seed=0) -> np.ndarray:
    """MC-dropout logits for a batch: array of shape ``(n, n_passes, C)``.

    Pass ``i`` draws its masks from the ``i``-th child of ``SeedSequence(seed)``,
    so results are reproducible and independent of batch composition order.
    """
    if n_passes < 1:
        raise DomainError("n_passes must be at least 1")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    streams = np.random.SeedSequence(seed).spawn(n_passes)
    out = np.empty((x.shape[0], n_passes, net.n_classes))
    for i, ss in enumerate(streams):
        mask = dropout_mask((x.shape[0], net.n_hidden), net.dropout_p, np.random.default_rng(ss))
        out[:, i, :] = forward(net, x, mask)[0]
    return out


def mc_predict(net: ToyNet, x, n_passes: int = 25, seed=0, label: int = 0) -> LogitSampleSet:
    """MC-dropout sample set for a single input."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_inputs,):
        raise InvalidInputError(f"expected an input of length {net.n_inputs}")
    return LogitSampleSet(mc_logits(net, x, n_passes, seed)[0], label)


def loss_and_grads(net: ToyNet, x, y, beta=0.0, mask=None):
    """Mean batch loss ``NLL - beta * H`` and its gradients for a frozen mask."""
    logits, (x, pre, dropped, mask) = forward(net, x, mask)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    with np.errstate(invalid="ignore", over="ignore"):
        log_p = logits - logits.max(axis=1, keepdims=True)
        log_p -= np.log(np.exp(log_p).sum(axis=1, keepdims=True))
    p = np.exp(log_p)
    rows = np.arange(n)
    entropy = -(p * log_p).sum(axis=1)
    loss = float(np.mean(-log_p[rows, y] - beta * entropy))

    d_logits = p.copy()
    d_logits[rows, y] -= 1.0
    if beta:
        # dH/dz_k = -p_k (log p_k + H)
        d_logits += beta * p * (log_p + entropy[:, None])
    d_logits /= n

    grads = {"w2": d_logits.T @ dropped, "b2": d_logits.sum(axis=0)}
    d_hidden = d_logits @ net.w2
    if mask is not None:
        d_hidden = d_hidden * mask
    d_pre = d_hidden * (pre > 0)
    grads["w1"] = d_pre.T @ x
    grads["b1"] = d_pre.sum(axis=0)
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 0.1
    cp_beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise DomainError("epochs must be at least 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be at least 1")
        if not self.learning_rate >= 0:
            raise DomainError("learning_rate must be non-negative")
        if not self.cp_beta >= 0:
            raise DomainError("cp_beta must be non-negative")


@dataclass(frozen=True)
class SyntheticDataset:
    inputs: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return self.labels.shape[0]

    @classmethod
    def blobs(cls, n, n_classes=3, sigma=1.0, radius=2.0, seed=0) -> "SyntheticDataset":
        """Isotropic 2-D Gaussian blobs centred evenly on a circle.

        Labels are balanced to within one point per class.
        """
        if n < 1 or n_classes < 2:
            raise DomainError("need n >= 1 and at least 2 classes")
        rng = np.random.default_rng(seed)
        labels = rng.permutation(np.arange(n) % n_classes)
        angles = 2.0 * math.pi * np.arange(n_classes) / n_classes
        centres = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        inputs = centres[labels] + sigma * rng.standard_normal((n, 2))
        return cls(inputs, labels.astype(np.int64))


def train(net: ToyNet, data: SyntheticDataset, cfg: TrainConfig) -> ToyNet:
    """Minibatch SGD with dropout active; returns a new trained network."""
    if len(data) == 0:
        raise DomainError("cannot train on an empty dataset")
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    n = len(data)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            mask = dropout_mask((batch.size, net.n_hidden), net.dropout_p, rng)
            loss, grads = loss_and_grads(net, data.inputs[batch], data.labels[batch], cfg.cp_beta, mask)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            if cfg.learning_rate:
                for name, g in grads.items():
                    getattr(net, name)[...] -= cfg.learning_rate * g
    return net


def mean_nll(net: ToyNet, data: SyntheticDataset) -> float:
    """Deterministic (no dropout) mean NLL over a dataset."""
    return loss_and_grads(net, data.inputs, data.labels)[0]


def save_checkpoint(net: ToyNet, path) -> None:
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "n_inputs": net.n_inputs,
        "n_hidden": net.n_hidden,
        "n_classes": net.n_classes,
        "dropout_p": net.dropout_p,
    }
    for name in PARAM_NAMES:
        doc[name] = getattr(net, name).tolist()
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_checkpoint(path) -> ToyNet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise SchemaError(f"unsupported checkpoint format_version {doc.get('format_version')!r}")
    try:
        net = ToyNet(*(np.array(doc[n], dtype=np.float64) for n in PARAM_NAMES),
                     dropout_p=float(doc["dropout_p"]))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed checkpoint: {exc}") from exc
    if (net.n_inputs, net.n_hidden, net.n_classes) != (doc["n_inputs"], doc["n_hidden"], doc["n_classes"]):
        raise SchemaError("checkpoint dimensions do not match its weight arrays")
    return net
