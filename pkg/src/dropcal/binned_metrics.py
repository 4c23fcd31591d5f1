"""Equal-width binning, ECE, UCE and reliability tables.

Bin ``k`` of ``m`` covers ``(k/m, (k+1)/m]``; bin 0 also owns 0.0, so every
value in [0, 1] lands in exactly one bin. Empty bins add nothing to the
calibration errors and show up in reports with NaN statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from dropcal._backend import kernels
from dropcal.errors import DomainError, InvalidInputError
from dropcal.prob_core import predictive_stats

DEFAULT_BINS = 15
AXES = ("confidence", "uncertainty")


@dataclass(frozen=True)
class PredictionRecord:
    confidence: float
    uncertainty: float
    predicted: int
    label: int

    @property
    def correct(self) -> bool:
        return self.predicted == self.label


@dataclass(frozen=True)
class Records:
    """Columnar form of a list of :class:`PredictionRecord`."""

    confidence: np.ndarray
    uncertainty: np.ndarray
    predicted: np.ndarray
    label: np.ndarray

    def __len__(self):
        return self.confidence.shape[0]

    @property
    def wrong(self) -> np.ndarray:
        return (self.predicted != self.label).astype(np.float64)

    @property
    def correct(self) -> np.ndarray:
        return (self.predicted == self.label).astype(np.float64)

    def __iter__(self):
        for c, u, p, y in zip(self.confidence, self.uncertainty, self.predicted, self.label):
            yield PredictionRecord(float(c), float(u), int(p), int(y))

    @classmethod
    def from_records(cls, records: Iterable[PredictionRecord]) -> "Records":
        records = list(records)
        return cls(
            np.array([r.confidence for r in records], dtype=np.float64),
            np.array([r.uncertainty for r in records], dtype=np.float64),
            np.array([r.predicted for r in records], dtype=np.int64),
            np.array([r.label for r in records], dtype=np.int64),
        )

    @classmethod
    def from_probs(cls, probs, labels) -> "Records":
        """Build records from an ``(n, C)`` array of predictive distributions."""
        predicted, confidence, uncertainty = predictive_stats(probs)
        return cls(
            np.asarray(confidence, dtype=np.float64),
            np.atleast_1d(np.asarray(uncertainty, dtype=np.float64)),
            np.asarray(predicted, dtype=np.int64),
            np.asarray(labels, dtype=np.int64),
        )


def as_records(records) -> Records:
    if isinstance(records, Records):
        out = records
    else:
        out = Records.from_records(records)
    if len(out) == 0:
        raise DomainError("need at least one prediction record")
    return out


def _check_m(m):
    if int(m) != m or m < 1:
        raise DomainError(f"bin count must be a positive integer, got {m!r}")
    return int(m)


def assign_bins(values, m: int = DEFAULT_BINS) -> np.ndarray:
    """Map values in [0, 1] to equal-width bin indices ``0 .. m-1``."""
    m = _check_m(m)
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if not np.all((values >= 0.0) & (values <= 1.0)):
        raise InvalidInputError("binned values must lie in [0, 1]")
    return kernels.bin_index(values, m)


def _weighted_gap(counts, sum_values, sum_flags, n):
    total = 0.0
    for count, sv, sf in zip(counts.tolist(), sum_values.tolist(), sum_flags.tolist()):
        if count:
            total += (count / n) * abs(sf / count - sv / count)
    return total


def _calibration_error(values, flags, m):
    idx = assign_bins(values, m)
    counts, sum_values, sum_flags = kernels.bin_sums(idx, values, flags, m)
    return _weighted_gap(counts, sum_values, sum_flags, values.shape[0])


def ece(records, m: int = DEFAULT_BINS) -> float:
    """Expected calibration error: bin on confidence, compare accuracy."""
    r = as_records(records)
    return _calibration_error(r.confidence, r.correct, _check_m(m))


def uce(records, m: int = DEFAULT_BINS) -> float:
    """Expected uncertainty calibration error: bin on normalized entropy,
    compare top-1 error rate."""
    r = as_records(records)
    return _calibration_error(r.uncertainty, r.wrong, _check_m(m))


@dataclass(frozen=True)
class BinnedReport:
    """Per-bin statistics along one axis plus the record set's ECE and UCE.

    Statistics of empty bins are NaN. The weighted per-bin gap along ``axis``
    sums to ``ece`` (confidence axis) or ``uce`` (uncertainty axis).
    """

    axis: str
    m_bins: int
    total_n: int
    counts: np.ndarray
    mean_confidence: np.ndarray
    accuracy: np.ndarray
    mean_uncertainty: np.ndarray
    error_rate: np.ndarray
    ece: float
    uce: float

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.m_bins + 1) / self.m_bins

    @property
    def gaps(self) -> np.ndarray:
        """Per-bin |observed - predicted| along the report's axis (NaN if empty)."""
        if self.axis == "confidence":
            return np.abs(self.accuracy - self.mean_confidence)
        return np.abs(self.error_rate - self.mean_uncertainty)

    @property
    def calibration_error(self) -> float:
        return self.ece if self.axis == "confidence" else self.uce


def _bin_means(idx, values, m):
    counts, sums, _ = kernels.bin_sums(idx, values, values, m)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def reliability_table(records, m: int = DEFAULT_BINS, axis: str = "confidence") -> BinnedReport:
    """Bin records along ``axis`` and tabulate the reliability-diagram data."""
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
    r = as_records(records)
    m = _check_m(m)
    values = r.confidence if axis == "confidence" else r.uncertainty
    idx = assign_bins(values, m)
    counts = np.bincount(idx, minlength=m).astype(np.int64)
    correct = r.correct
    mean_conf = _bin_means(idx, r.confidence, m)
    acc = _bin_means(idx, correct, m)
    mean_unc = _bin_means(idx, r.uncertainty, m)
    err = _bin_means(idx, 1.0 - correct, m)
    return BinnedReport(
        axis=axis,
        m_bins=m,
        total_n=len(r),
        counts=counts,
        mean_confidence=mean_conf,
        accuracy=acc,
        mean_uncertainty=mean_unc,
        error_rate=err,
        ece=ece(r, m),
        uce=uce(r, m),
    )


def error_from_table(counts: Sequence[int], observed: Sequence[float],
                     predicted: Sequence[float]) -> float:
    """Recompute a calibration error from per-bin counts and means.

    Used to check serialized tables against their reported ECE/UCE.
    """
    n = sum(int(c) for c in counts)
    total = 0.0
    for c, o, p in zip(counts, observed, predicted):
        if c:
            total += (c / n) * abs(o - p)
    return total

