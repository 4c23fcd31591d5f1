"""Rejection of uncertain predictions by thresholding normalized entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dropcal.binned_metrics import as_records
from dropcal.errors import InvalidInputError


def default_thresholds() -> np.ndarray:
    """101 thresholds from 1.0 down to 0.0 in steps of 0.01."""
    return np.round(np.linspace(1.0, 0.0, 101), 2)


@dataclass(frozen=True)
class RejectionCurve:
    """Retained-set statistics per threshold; error is NaN when nothing is retained."""

    thresholds: np.ndarray
    retained_count: np.ndarray
    retained_fraction: np.ndarray
    top1_error: np.ndarray
    total_n: int

    def __len__(self):
        return self.thresholds.shape[0]


def reject_sweep(records, thresholds=None) -> RejectionCurve:
    """Keep predictions with uncertainty <= H_max for each threshold H_max.

    Thresholds are reported in the order given (descending by default).
    """
    r = as_records(records)
    thresholds = default_thresholds() if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    thresholds = np.atleast_1d(thresholds)
    if not np.all((thresholds >= 0.0) & (thresholds <= 1.0)):
        raise InvalidInputError("thresholds must lie in [0, 1]")

    order = np.argsort(r.uncertainty, kind="stable")
    sorted_unc = r.uncertainty[order]
    cum_wrong = np.concatenate([[0.0], np.cumsum(r.wrong[order])])
    counts = np.searchsorted(sorted_unc, thresholds, side="right")
    with np.errstate(invalid="ignore", divide="ignore"):
        errors = np.where(counts > 0, cum_wrong[counts] / np.maximum(counts, 1), np.nan)
    n = len(r)
    return RejectionCurve(
        thresholds=thresholds,
        retained_count=counts.astype(np.int64),
        retained_fraction=counts / n,
        top1_error=errors,
        total_n=n,
    )
