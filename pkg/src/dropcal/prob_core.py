"""Numerically stable probability primitives for MC-dropout outputs.

Every function here is pure. Logit stacks are float64 numpy arrays; a single
input's stochastic forward passes form an ``(N, C)`` array and a batch of
inputs an ``(n, N, C)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dropcal._backend import kernels
from dropcal.errors import DomainError, InvalidInputError

PROB_FLOOR = 1e-300


def _check_t(t):
    if not (isinstance(t, (int, float, np.floating)) and math.isfinite(t) and t > 0):
        raise DomainError(f"temperature must be a positive finite real, got {t!r}")


def _as_logits(z, ndim):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != ndim:
        raise InvalidInputError(f"expected a {ndim}-d logit array, got shape {z.shape}")
    if z.shape[-1] < 2:
        raise InvalidInputError("logit vectors need at least 2 classes")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite")
    return z


@dataclass(frozen=True)
class LogitSampleSet:
    """N stochastic-forward-pass logit vectors for one input, plus its label.

    ``samples`` has shape ``(N, C)``; ``label`` is a zero-based class index.
    """

    samples: np.ndarray
    label: int

    def __post_init__(self):
        samples = _as_logits(self.samples, 2)
        if samples.shape[0] < 1:
            raise InvalidInputError("a sample set needs at least one forward pass")
        label = int(self.label)
        if not 0 <= label < samples.shape[1]:
            raise InvalidInputError(
                f"label {label} out of range for {samples.shape[1]} classes"
            )
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "label", label)

    @property
    def n_passes(self) -> int:
        return self.samples.shape[0]

    @property
    def n_classes(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class TemperatureParam:
    """Fitted temperature ``t`` (the logit multiplier is ``1 / t``)."""

    t: float
    fit_nll: float = float("nan")
    fit_iterations: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _check_t(self.t)
        object.__setattr__(self, "t", float(self.t))


def stack_sets(sets: Sequence[LogitSampleSet]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sample sets into an ``(n, N, C)`` logit array and a label vector.

    All sets must share N and C.
    """
    if len(sets) == 0:
        raise DomainError("need at least one sample set")
    shape = sets[0].samples.shape
    for s in sets:
        if s.samples.shape != shape:
            raise InvalidInputError(
                f"sample sets disagree on shape: {s.samples.shape} vs {shape}"
            )
    logits = np.stack([s.samples for s in sets])
    labels = np.fromiter((s.label for s in sets), dtype=np.int64, count=len(sets))
    return logits, labels


def softmax(z, t: float = 1.0) -> np.ndarray:
    """Softmax of ``z / t`` along the last axis.

    The max is subtracted before dividing by ``t`` so neither step can overflow.
    """
    _check_t(t)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim < 1 or z.shape[-1] < 2:
        raise InvalidInputError("softmax needs at least 2 classes")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite")
    e = np.exp((z - z.max(axis=-1, keepdims=True)) / t)
    return e / e.sum(axis=-1, keepdims=True)


def mc_integrate(s: LogitSampleSet, t: float = 1.0) -> np.ndarray:
    """Average of the per-pass softmax outputs at temperature ``t``."""
    _check_t(t)
    return kernels.mc_integrate_batch(s.samples[None], float(t))[0]


def mc_integrate_batch(logits, t: float = 1.0) -> np.ndarray:
    """Vectorized :func:`mc_integrate` over an ``(n, N, C)`` logit array."""
    _check_t(t)
    logits = _as_logits(logits, 3)
    return kernels.mc_integrate_batch(np.ascontiguousarray(logits), float(t))


def normalized_entropy(p) -> np.ndarray | float:
    """Shannon entropy divided by ``log C``, clamped to [0, 1].

    Accepts one probability vector or a batch along the last axis.
    Uses ``0 * log 0 = 0``.
    """
    p = np.asarray(p, dtype=np.float64)
    n_classes = p.shape[-1] if p.ndim else 0
    if n_classes < 2:
        raise DomainError("normalized entropy is undefined for fewer than 2 classes")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    h = np.clip(-terms.sum(axis=-1) / math.log(n_classes), 0.0, 1.0)
    return float(h) if h.ndim == 0 else h


def predictive_stats(probs):
    """Return (predicted, confidence, uncertainty) for an ``(n, C)`` array.

    Ties in argmax go to the lowest class index.
    """
    probs = np.asarray(probs, dtype=np.float64)
    predicted = probs.argmax(axis=-1)
    confidence = probs.max(axis=-1)
    return predicted, confidence, normalized_entropy(probs)


def nll(sets: Sequence[LogitSampleSet], t: float = 1.0) -> float:
    """Negative log-likelihood of the labels under the MC-integrated predictive.

    Each per-input probability is floored at 1e-300 before the log.
    """
    logits, labels = stack_sets(sets)
    return nll_array(logits, labels, t)


def nll_array(logits, labels, t: float = 1.0) -> float:
    """:func:`nll` on a pre-stacked ``(n, N, C)`` array."""
    return nll_and_grad_array(logits, labels, t)[0]


def nll_and_grad_array(logits, labels, t: float = 1.0) -> tuple[float, float]:
    """NLL and its analytic derivative with respect to ``t``."""
    _check_t(t)
    logits, labels = check_logit_batch(logits, labels)
    return _nll_and_grad(logits, labels, t)


def check_logit_batch(logits, labels):
    """Validate and normalize an ``(n, N, C)`` logit array and its labels."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 3 or logits.shape[0] == 0 or logits.shape[1] == 0:
        raise DomainError("need a nonempty (n, N, C) logit array")
    logits = _as_logits(logits, 3)
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0],):
        raise InvalidInputError("labels must have one entry per input")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[2]):
        raise InvalidInputError("labels out of class range")
    return (
        np.ascontiguousarray(logits),
        np.ascontiguousarray(labels, dtype=np.int64),
    )


def _nll_and_grad(logits, labels, t):
    # inputs already validated by check_logit_batch
    value, grad = kernels.mc_nll_grad(logits, labels, float(t))
    return float(value), float(grad)
