"""Calibration of MC-dropout uncertainty by temperature scaling."""

__version__ = "0.1.0"

from dropcal._backend import BACKEND
from dropcal.binned_metrics import (
    BinnedReport,
    PredictionRecord,
    Records,
    assign_bins,
    ece,
    reliability_table,
    uce,
)
from dropcal.errors import (
    DomainError,
    DropcalError,
    FitFailureError,
    InvalidInputError,
    ParseError,
    SchemaError,
    TrainingDivergedError,
)
from dropcal.prob_core import (
    LogitSampleSet,
    TemperatureParam,
    mc_integrate,
    mc_integrate_batch,
    nll,
    nll_array,
    normalized_entropy,
    softmax,
)
from dropcal.rejection import RejectionCurve, reject_sweep
from dropcal.temp_fit import FitConfig, fit_temperature, fit_temperature_array, nll_grad_t

__all__ = [
    "BACKEND", "BinnedReport", "DomainError", "DropcalError", "FitConfig",
    "FitFailureError", "InvalidInputError", "LogitSampleSet", "ParseError",
    "PredictionRecord", "Records", "RejectionCurve", "SchemaError",
    "TemperatureParam", "TrainingDivergedError", "assign_bins", "ece",
    "fit_temperature", "fit_temperature_array", "mc_integrate", "mc_integrate_batch", "nll",
    "nll_array", "nll_grad_t", "normalized_entropy", "reject_sweep", "reliability_table",
    "softmax", "uce",
]
