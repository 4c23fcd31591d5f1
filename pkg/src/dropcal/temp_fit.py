"""Fit a scalar temperature by minimizing MC-dropout validation NLL.

The logit samples are frozen: every candidate temperature is scored on the
same ``(n, N, C)`` array, so the objective is deterministic. The MC-averaged
NLL need not be unimodal in T, hence a coarse log-spaced grid first and a
golden-section refinement inside the best grid bracket afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dropcal.errors import DomainError, FitFailureError
from dropcal.prob_core import (
    LogitSampleSet,
    TemperatureParam,
    _nll_and_grad,
    check_logit_batch,
    nll_and_grad_array,
    stack_sets,
)

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FitConfig:
    t_min: float = 0.05
    t_max: float = 10.0
    grid_points: int = 50
    refine_tolerance: float = 1e-4  # on log T
    max_refine_iters: int = 100

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max and math.isfinite(self.t_max)):
            raise DomainError(f"need 0 < t_min < t_max, got {self.t_min}, {self.t_max}")
        if self.grid_points < 3:
            raise DomainError("grid_points must be at least 3")
        if not self.refine_tolerance > 0:
            raise DomainError("refine_tolerance must be positive")

    def grid(self) -> np.ndarray:
        """Log-spaced candidates, with T = 1 inserted when it is in range."""
        g = np.exp(np.linspace(math.log(self.t_min), math.log(self.t_max), self.grid_points))
        g[0], g[-1] = self.t_min, self.t_max
        if self.t_min <= 1.0 <= self.t_max and not np.any(g == 1.0):
            g = np.sort(np.append(g, 1.0))
        return g


def nll_grad_t(validation: Sequence[LogitSampleSet], t: float) -> float:
    """Analytic d NLL / dT of the MC-integrated validation NLL."""
    logits, labels = stack_sets(validation)
    return nll_and_grad_array(logits, labels, t)[1]


def _golden(f, lo, hi, tol, max_iters):
    """Golden-section minimization of ``f`` on [lo, hi]; returns (x, fx, iters)."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    iters = 0
    while b - a > tol and iters < max_iters:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        iters += 1
    return (c, fc, iters) if fc <= fd else (d, fd, iters)


def fit_temperature_array(logits, labels, cfg: FitConfig | None = None) -> TemperatureParam:
    """:func:`fit_temperature` on a pre-stacked ``(n, N, C)`` array."""
    cfg = cfg or FitConfig()
    logits, labels = check_logit_batch(logits, labels)

    def objective(log_t):
        return _nll_and_grad(logits, labels, math.exp(log_t))[0]

    grid = cfg.grid()
    scores = np.array([_nll_and_grad(logits, labels, t)[0] for t in grid])
    finite = np.isfinite(scores)
    if not finite.any():
        raise FitFailureError("NLL is non-finite at every grid temperature")
    scores[~finite] = np.inf
    k = int(np.argmin(scores))
    log_grid = np.log(grid)
    lo = log_grid[max(k - 1, 0)]
    hi = log_grid[min(k + 1, len(grid) - 1)]
    log_t, value, iters = _golden(objective, lo, hi, cfg.refine_tolerance, cfg.max_refine_iters)
    if not value <= scores[k]:
        log_t, value = log_grid[k], scores[k]
    t = min(max(math.exp(log_t), cfg.t_min), cfg.t_max)
    logger.debug("fitted T=%.6g (nll=%.6g) after %d refine steps", t, value, iters)
    return TemperatureParam(t=t, fit_nll=float(value), fit_iterations=len(grid) + iters)


def fit_temperature(validation: Sequence[LogitSampleSet], cfg: FitConfig | None = None) -> TemperatureParam:
    """Fit T on a validation set of frozen MC-dropout logit samples.

    Returns the temperature whose NLL is no worse than any grid candidate
    (including T = 1 when it lies in ``[t_min, t_max]``).
    """
    logits, labels = stack_sets(validation)
    return fit_temperature_array(logits, labels, cfg)
